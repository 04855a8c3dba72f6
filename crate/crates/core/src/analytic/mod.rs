//! Closed-form constructions on edge E and the two-qubit obstruction.

mod blocks;
mod ninth;
mod pairing;
mod qubit;
mod ufamily;

pub use blocks::{build_block_set, build_five_plus_five, mix_pair, BlockSet, Dressings};
pub use ninth::{
    build_ninth_and_tenth, closed_form_dual, closed_form_theta, ninth_feasibility_certificate, solve_ninth_params,
    Certificate, DualMethod, NinthAndTenth, NinthParams, WCandidate,
};
pub use pairing::{detect_pairing, pair_transform, PairTransform, PairingReport, Shape, LAMBDA_STAR};
pub use qubit::{forced_second_unitary, qubit_no_go, third_message_operator, QubitNoGo};
pub use ufamily::{build_u_family, extend_u_family, fifth_member, FifthMember, UFamily, UMember};
