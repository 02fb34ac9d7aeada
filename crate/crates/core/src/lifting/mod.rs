//! Global linearisation: ε-net Markov lifts of nonlinear maps, and the
//! thinplate dictionary used by eDMD.

mod edmd;
mod markov;
mod net;
mod rbf;

pub use edmd::{edmd_fit, sfedmd_features, sfedmd_fit, EdmdFit};
pub use markov::{lift_rollout, markov_lift, markov_lift_stochastic, DiscreteLift, Transition};
pub use net::{build_eps_net, EpsNet, MAX_NET_POINTS};
pub use rbf::{fit_rbf_dictionary, thinplate, RbfDictionary};
