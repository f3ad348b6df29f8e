//! Closed-world fact-checking pipeline.
//!
//! The crate covers the whole offline and online path of a paragraph-level
//! fact-checking system:
//!
//! - [`corpus`]: page cleaning, greedy paragraph merging and corpus assembly
//! - [`lexical`]: tokenizer, BM-25 inverted index and search
//! - [`gateway`]: uniform access to the neural roles (NER, QG, CG, dense, NLI)
//! - [`qacg`]: SUPPORTS / REFUTES / NEI claim synthesis and dataset assembly
//! - [`nway`]: retrieval training tuples with lexical hard negatives
//! - [`calibration`]: temperature scaling of NLI logits
//! - [`pvi`]: pointwise V-information and dataset difficulty reports
//! - [`retrieval`]: lexical, dense, keyword-filtered and NLI-reranked retrieval
//! - [`eval`]: MRR@k, P@k and macro F1
//! - [`highlight`]: Jaro-Winkler word highlighting

pub mod calibration;
pub mod corpus;
pub mod eval;
pub mod gateway;
pub mod highlight;
pub mod jsonl;
pub mod label;
pub mod lexical;
pub mod nway;
pub mod pvi;
pub mod qacg;
pub mod retrieval;
pub mod seed;

pub use label::{Label, Split};
