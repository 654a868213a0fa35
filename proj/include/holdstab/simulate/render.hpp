#pragma once

#include <vector>

#include "holdstab/core/image.hpp"
#include "holdstab/core/labels.hpp"
#include "holdstab/simulate/physics.hpp"

namespace holdstab {

/// Piecewise-constant contact state over a cycle.
struct MarginSegment {
    double start = 0.0;
    double end = 0.0;
    StabilityMargin margin;
    PhaseLabel label = PhaseLabel::Pass;
};

struct MarginHistory {
    double contact_time = 0.0;
    /// Gripper opens; background only afterwards.
    double release_time = 0.0;
    /// Ordered, non-overlapping, inside [contact_time, release_time].
    std::vector<MarginSegment> segments;
    double slip_band = 0.15;
};

struct ImprintParams {
    int height = 24;
    int width = 32;
    double center_row = 13.0;
    double center_col = 16.0;
    double sigma_major_px = 5.0;
    double sigma_minor_px = 3.0;
    double amplitude = 80.0;
    /// Material texture, 0 (smooth) .. 0.5 (rough).
    double texture_contrast = 0.2;
    double texture_period_px = 3.0;
    /// Sub-pixel shift toward the top proportional to the friction load ratio.
    double shear_gain_px = 0.9;
    /// Ellipse tilt proportional to the torsional load ratio, radians.
    double tilt_gain_rad = 0.35;
    /// Slip: accumulated-slip units per second at zero margin, and per unit of -margin.
    double slip_rate_base = 1.0;
    double slip_rate_gain = 10.0;
    double slip_px_per_unit = 1.5;
    double slip_decay_per_unit = 0.15;
    /// Fraction of a Drop segment after which the imprint is gone.
    double drop_fraction = 0.5;
    double background_level = 32.0;
    double background_vignette = 14.0;
};

struct ContactState {
    bool in_contact = false;
    double accumulated_slip = 0.0;
    double amplitude_factor = 0.0;
    double shift_up_px = 0.0;
    double tilt_rad = 0.0;
};

/// Integrates the history up to time t.
ContactState contact_state(const MarginHistory& history, const ImprintParams& params, double t);

/// Sensor background without any contact.
ImageF tactile_background(const ImprintParams& params);

/// Noise-free tactile frame: background plus an anisotropic Gaussian imprint.
/// Passing contact keeps the imprint in place (sub-pixel shear only); slip moves
/// it toward the top row while it fades; a drop erases it within the phase.
ImageF render_tactile(const MarginHistory& history, const ImprintParams& params, double t);

}  // namespace holdstab
