#include "holdstab/simulate/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace holdstab {

namespace {

double load_ratio(double margin) { return std::clamp(1.0 - margin, 0.0, 1.0); }

}  // namespace

ContactState contact_state(const MarginHistory& h, const ImprintParams& p, double t) {
    ContactState s;
    if (t < h.contact_time || t >= h.release_time) return s;
    s.in_contact = true;
    s.amplitude_factor = 1.0;
    double drop_factor = 1.0;
    for (const auto& seg : h.segments) {
        if (t < seg.start) break;
        const double until = std::min(t, seg.end);
        const double dt = until - seg.start;
        const bool current = t < seg.end;
        if (seg.label == PhaseLabel::Slip) {
            const double rate = p.slip_rate_base + p.slip_rate_gain * std::max(0.0, -seg.margin.combined());
            s.accumulated_slip += rate * dt;
        } else if (seg.label == PhaseLabel::Drop || seg.label == PhaseLabel::NotPresent) {
            const double gone_after = (seg.end - seg.start) * p.drop_fraction;
            const double frac = gone_after > 0.0 ? std::min(1.0, dt / gone_after) : 1.0;
            const double rate = p.slip_rate_base + p.slip_rate_gain * h.slip_band;
            s.accumulated_slip += rate * std::min(dt, gone_after) * 2.0;
            drop_factor = seg.label == PhaseLabel::NotPresent ? 0.0 : 1.0 - frac;
            if (drop_factor <= 0.0) break;
        }
        if (current) {
            s.shift_up_px = p.shear_gain_px * load_ratio(seg.margin.translational);
            s.tilt_rad = p.tilt_gain_rad * load_ratio(seg.margin.rotational);
        }
    }
    s.shift_up_px += p.slip_px_per_unit * s.accumulated_slip;
    s.amplitude_factor = std::exp(-p.slip_decay_per_unit * s.accumulated_slip) * drop_factor;
    if (s.amplitude_factor <= 0.0) s.amplitude_factor = 0.0;
    return s;
}

ImageF tactile_background(const ImprintParams& p) {
    ImageF img(p.height, p.width, 1);
    const double cr = 0.5 * (p.height - 1), cc = 0.5 * (p.width - 1);
    const double norm = cr * cr + cc * cc;
    for (int r = 0; r < p.height; ++r)
        for (int c = 0; c < p.width; ++c) {
            const double d2 = ((r - cr) * (r - cr) + (c - cc) * (c - cc)) / norm;
            img.at(r, c) = static_cast<float>(p.background_level + p.background_vignette * (1.0 - d2));
        }
    return img;
}

ImageF render_tactile(const MarginHistory& h, const ImprintParams& p, double t) {
    ImageF img = tactile_background(p);
    const auto s = contact_state(h, p, t);
    if (!s.in_contact || s.amplitude_factor <= 0.0) return img;
    const double amp = p.amplitude * s.amplitude_factor;
    const double row0 = p.center_row - s.shift_up_px;
    const double col0 = p.center_col;
    const double ct = std::cos(s.tilt_rad), st = std::sin(s.tilt_rad);
    const double inv_a = 1.0 / (2.0 * p.sigma_major_px * p.sigma_major_px);
    const double inv_b = 1.0 / (2.0 * p.sigma_minor_px * p.sigma_minor_px);
    const double k = 2.0 * std::numbers::pi / p.texture_period_px;
    for (int r = 0; r < p.height; ++r) {
        for (int c = 0; c < p.width; ++c) {
            const double dx = c - col0, dy = r - row0;
            // major axis along columns when untilted
            const double u = ct * dx + st * dy;
            const double v = -st * dx + ct * dy;
            const double blob = std::exp(-(u * u * inv_a + v * v * inv_b));
            const double texture = 1.0 + p.texture_contrast * std::cos(k * (u + 0.5 * v));
            img.at(r, c) += static_cast<float>(amp * blob * texture);
        }
    }
    return img;
}

}  // namespace holdstab
