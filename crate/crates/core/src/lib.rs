//! Capacity-achieving T-private information retrieval over a prime field.
//!
//! `M` records of `L = d n^(M-1)` symbols each are replicated on `N`
//! servers. A client retrieves one record so that no coalition of `T`
//! servers learns which, downloading `d (n^M - t^M) / (n - t)` symbols in
//! total, which meets the capacity `(1 - T/N) / (1 - (T/N)^M)`.
//!
//! ```
//! use std::sync::Arc;
//! use rand::SeedableRng;
//! use tpir::{build_plan, run_round, Exec, MdsCode, RecordSet, SchemeParams};
//!
//! let p = SchemeParams::with_default_field(3, 3, 2).unwrap();
//! let code = MdsCode::new(3, 2, p.field()).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let db = RecordSet::random(p.field(), 3, p.sub_packetization(), &mut rng);
//! let plan = Arc::new(build_plan(&p, 1).unwrap());
//! let round = run_round(&plan, &code, &db, &mut rng, Exec::Sequential).unwrap();
//! assert_eq!(round.recovered, db.record(1));
//! assert_eq!(round.downloaded(), 19);
//! ```

pub mod audit;
mod elim;
pub mod error;
pub mod field;
pub mod locator;
pub mod matrix;
pub mod mds;
pub mod par;
pub mod params;
pub mod plan;
pub mod protocol;
#[doc(hidden)]
pub mod testing;
pub mod transport;
pub mod wire;

pub use error::{Error, Result};
pub use field::{Fq, PrimeField};
pub use locator::{make_e, make_locator, BinaryMatrix, LocatorMatrix};
pub use matrix::{mix_interference, LowerUpper, MatrixFq};
pub use mds::MdsCode;
pub use par::Exec;
pub use params::{capacity, Rate, SchemeParams};
pub use plan::{build_plan, AnswerPlan, TypeSet};
pub use protocol::{client_query, reconstruct, run_round, server_answer, Answer, ClientState, Query, RecordSet};
