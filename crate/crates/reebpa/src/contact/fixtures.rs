//! Catalogue of chart forms used across the test and command suites.

use super::ChartContactForm;

/// Rotationally symmetric reference form dt + r^2 dtheta.
pub fn std_form() -> ChartContactForm {
    ChartContactForm::from_strings("1", "0", "r^2")
        .unwrap()
        .with_lipschitz(2.0)
}

/// Branched-cover pullback of the reference form under a degree-2 fold;
/// identity-chart volume density is exactly 2r despite the angular factors.
pub fn bp() -> ChartContactForm {
    ChartContactForm::from_strings("1", "(r/2)*sin(4*th)", "2*r^2*cos(2*th)^2")
        .unwrap()
        .with_lipschitz(4.0)
}

/// bp with a time-periodic ripple on the dtheta component.
pub fn bp_pert() -> ChartContactForm {
    ChartContactForm::from_strings(
        "1",
        "(r/2)*sin(4*th)",
        "2*r^2*cos(2*th)^2 + 0.01*sin(2*pi*t)*r^2",
    )
    .unwrap()
    .with_lipschitz(4.1)
}

/// bp with a time-periodic ripple on the dr component instead; this one
/// tilts the Reeb field off the vertical, so its Gray bound is positive.
pub fn bp_twist() -> ChartContactForm {
    ChartContactForm::from_strings(
        "1",
        "(r/2)*sin(4*th) + 0.01*sin(2*pi*t)*r^2",
        "2*r^2*cos(2*th)^2",
    )
    .unwrap()
    .with_lipschitz(4.1)
}

/// Orientation-reversed angular term; fails every contact check away from
/// the axis and exhausts the amplitude ladder.
pub fn neg_axis() -> ChartContactForm {
    ChartContactForm::from_strings("1", "0", "-r^2")
        .unwrap()
        .with_lipschitz(2.0)
}

/// Reference form with a slow clock (u = 3): the Reeb flow crosses the
/// disk at dt/ds = 1/3, tripling section return times.
pub fn slow() -> ChartContactForm {
    ChartContactForm::from_strings("3", "0", "r^2")
        .unwrap()
        .with_lipschitz(2.0)
}

pub const NAMES: [&str; 6] = ["std", "bp", "bp_pert", "bp_twist", "neg_axis", "slow"];

pub fn by_name(name: &str) -> Option<ChartContactForm> {
    match name {
        "std" => Some(std_form()),
        "bp" => Some(bp()),
        "bp_pert" => Some(bp_pert()),
        "bp_twist" => Some(bp_twist()),
        "neg_axis" => Some(neg_axis()),
        "slow" => Some(slow()),
        _ => None,
    }
}
