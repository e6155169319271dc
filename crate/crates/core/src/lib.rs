//! Exact verification and simulation for a probabilistic colouring rule on
//! the semigroup `⟨T1, T2 | T1³T2 = T2T1³⟩`.
//!
//! * [`exactnum`]: arithmetic in Q(√7).
//! * [`words`]: normal forms, enumeration and independence search.
//! * [`rule`]: the `A`/`B` payoff data and the colouring correspondence.
//! * [`markov`]: stationary analysis of the random-colouring regime.
//! * [`sim`]: finite fragments, propagation and Monte Carlo.
//! * [`game`]: the two-player Bayesian game and its stability checks.
//! * [`cli`]: command-line front end and report formats.

pub mod cli;
pub mod exactnum;
pub mod game;
pub mod markov;
pub mod rule;
pub mod sim;
pub mod words;

pub use exactnum::{Q7Number, Rational, Sign};
pub use markov::{Distribution3, TransitionMatrix};
pub use rule::{PureColour, SimplexColour};
pub use sim::{Colouring, Region};
pub use words::Word;
