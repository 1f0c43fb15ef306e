#include "ehpa/staircase.hpp"

namespace ehpa {

double SegmentedDerivative::value(double p) const {
    double v = intercept;
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        const double lo = breakpoints[i], hi = breakpoints[i + 1];
        if (p <= lo) break;
        v += slopes[i] * (std::min(p, hi) - lo);
    }
    return v;
}

ContinuationProfile::ContinuationProfile(const PwlValue& next, std::span<const double> error_atoms,
                                         std::span<const double> error_probs, std::array<double, 2> next_access) {
    if (error_atoms.empty() || error_atoms.size() != error_probs.size()) {
        throw ContractError("continuation profile: malformed error law");
    }
    const auto& grid = next.grid();
    const double b_max = grid.b_max();
    const double eps_min = *std::min_element(error_atoms.begin(), error_atoms.end());
    const double lo = -eps_min, hi = b_max - eps_min;
    const double merge = 1e-10 * std::max(1.0, b_max);

    std::vector<double> raw;
    raw.reserve(grid.size() * error_atoms.size());
    for (double eps : error_atoms) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.point(i) - eps;
            if (x >= lo - merge && x <= hi + merge) raw.push_back(x);
        }
    }
    raw.push_back(lo);
    raw.push_back(hi);
    std::sort(raw.begin(), raw.end());
    for (double x : raw) {
        if (knots_.empty() || x - knots_.back() > merge) knots_.push_back(x);
    }

    values_.resize(knots_.size());
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        double v = 0.0;
        for (Access a : {Access::denied, Access::granted}) {
            const double pa = next_access[index_of(a)];
            if (pa == 0.0) continue;
            double inner = 0.0;
            for (std::size_t j = 0; j < error_atoms.size(); ++j) {
                if (error_probs[j] == 0.0) continue;
                const double b = std::clamp(knots_[k] + error_atoms[j], 0.0, b_max);
                inner += error_probs[j] * next(b, a);
            }
            v += pa * inner;
        }
        if (!std::isfinite(v)) throw NumericError("continuation profile: non-finite value");
        values_[k] = v;
    }
    slopes_.assign(knots_.size(), 0.0);
    for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
        slopes_[k] = (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
    }
}

std::size_t ContinuationProfile::interval_of(double x) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    if (it == knots_.begin()) return 0;
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

double ContinuationProfile::operator()(double x) const {
    if (x >= knots_.back()) return values_.back();
    if (x <= knots_.front()) return values_.front();
    const auto j = interval_of(x);
    if (x == knots_[j]) return values_[j];
    return values_[j] + slopes_[j] * (x - knots_[j]);
}

ProfileWindow ContinuationProfile::window(double battery, double harvest, double p_max, double slot_length,
                                          double gamma) const {
    if (!(battery >= 0.0)) throw DomainError("battery level must be non-negative");
    const double p_hi = std::min(p_max, battery / slot_length);
    return ProfileWindow(*this, battery + harvest, p_hi, slot_length, gamma);
}

ProfileWindow::ProfileWindow(const ContinuationProfile& profile, double x_hi, double p_hi, double slot_length,
                             double gamma)
    : profile_(&profile), x_hi_(x_hi), p_hi_(p_hi), slot_length_(slot_length), gamma_(gamma) {
    const auto knots = profile.knots();
    const double tol = 1e-11 * std::max(1.0, std::abs(knots.back()));
    const double x_lo = x_hi - p_hi * slot_length;
    hi_ = static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), x_hi - tol) - knots.begin());
    hi_ = std::max<std::size_t>(hi_, 1);
    const auto lo = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x_lo + tol) - knots.begin());
    count_ = hi_ > lo ? hi_ - lo : 0;
}

SegmentedDerivative ProfileWindow::materialize() const {
    SegmentedDerivative d;
    d.intercept = intercept();
    d.breakpoints.push_back(0.0);
    const std::size_t n = segments();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = slope(i);
        const double right = breakpoint(i + 1);
        if (!d.slopes.empty() && std::abs(w - d.slopes.back()) <= 1e-14 * std::max(1.0, std::abs(w))) {
            d.breakpoints.back() = right;
        } else {
            d.slopes.push_back(w);
            d.breakpoints.push_back(right);
        }
    }
    return d;
}

}  // namespace ehpa
