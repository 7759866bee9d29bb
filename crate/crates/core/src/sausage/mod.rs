//! Sausages `Sigma_t = U_{s <= t} (zeta(s) + S(r))` of a moving closed ball.

mod envelope;
mod hitting;
mod occupation;
mod spitzer;
mod volume;

pub use envelope::{fit_growth_envelope, GrowthFit};
pub use hitting::{coverage_probability, first_hitting_time, SausageQuery};
pub use occupation::{kernel_exposure, occupation_time};
pub use volume::{ball_sausage_volume, bridged_profile, hit_or_miss_profile, Refinement, SausageMc};

pub(crate) use volume::{dilated_bbox, lifetime, uniform_points, volume_of_box};
