pub mod decay;
pub mod functionals;
pub mod ledger;
pub mod norms;
pub mod stability;

pub use decay::{decay_fit, log_spaced, DecayFit};
pub use functionals::{script_g, script_g_of_state, script_g_terms, ScriptG};
pub use ledger::{mass_ledger, MassLedger};
pub use norms::{bv_norm, NormReport};
pub use stability::{data_distance, stability_probe, StabilityReport};
