#include "ehpa/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "ehpa/errors.hpp"
#include "ehpa/text.hpp"

namespace ehpa {

Access access_from_int(long value) {
    if (value == 0) return Access::denied;
    if (value == 1) return Access::granted;
    throw DomainError("access state must be 0 or 1, got " + std::to_string(value));
}

BatteryGrid::BatteryGrid(double b_max, double delta) : b_max_(b_max), delta_(delta), count_(0) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ContractError("grid step delta must be positive");
    if (!(b_max > 0.0) || !std::isfinite(b_max)) throw ContractError("battery capacity b_max must be positive");
    const double ratio = b_max / delta;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw ContractError("b_max = " + text::format_double(b_max) +
                            " is not an integer multiple of delta = " + text::format_double(delta));
    }
    count_ = static_cast<std::size_t>(steps) + 1;
}

std::size_t BatteryGrid::floor_index(double b) const {
    if (!(b > 0.0)) return 0;
    if (b >= b_max_) return count_ - 1;
    auto i = std::min(count_ - 1, static_cast<std::size_t>(b / delta_));
    while (i > 0 && point(i) > b) --i;
    while (i + 1 < count_ && point(i + 1) <= b) ++i;
    return i;
}

std::size_t BatteryGrid::nearest_index(double b) const {
    const auto i = floor_index(b);
    if (i + 1 < count_ && point(i + 1) - b < b - point(i)) return i + 1;
    return i;
}

PwlValue::PwlValue(BatteryGrid grid, std::vector<double> denied, std::vector<double> granted)
    : grid_(grid), samples_{std::move(denied), std::move(granted)} {
    for (const auto& s : samples_) {
        if (s.size() != grid_.size()) {
            throw ContractError("PwlValue: " + std::to_string(s.size()) + " samples for a grid of " +
                                std::to_string(grid_.size()) + " points");
        }
        for (double v : s) {
            if (!std::isfinite(v)) throw NumericError("PwlValue: non-finite sample");
        }
    }
}

PwlValue PwlValue::zero(const BatteryGrid& grid) {
    return PwlValue(grid, std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0));
}

double PwlValue::operator()(double b, Access a) const {
    if (!(b >= 0.0)) throw DomainError("battery level must be non-negative, got " + text::format_double(b));
    const auto& s = samples_[index_of(a)];
    if (b >= grid_.b_max()) return s.back();
    const auto i = grid_.floor_index(b);
    const double lo = grid_.point(i);
    if (b == lo) return s[i];
    const double frac = (b - lo) / grid_.delta();
    return s[i] + frac * (s[i + 1] - s[i]);
}

namespace pwl {

double eval(const PwlValue& f, double b, Access a) { return f(b, a); }

double sup_distance(const PwlValue& f, const PwlValue& g) {
    if (!(f.grid() == g.grid())) throw ContractError("sup_distance: grid mismatch");
    double d = 0.0;
    for (Access a : {Access::denied, Access::granted}) {
        const auto fs = f.samples(a);
        const auto gs = g.samples(a);
        for (std::size_t i = 0; i < fs.size(); ++i) d = std::max(d, std::abs(fs[i] - gs[i]));
    }
    return d;
}

ShapeReport shape_check(const PwlValue& f, double tol) {
    ShapeReport r;
    r.tolerance = tol;
    for (Access a : {Access::denied, Access::granted}) {
        const auto s = f.samples(a);
        const auto ai = index_of(a);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            r.monotonicity[ai] = std::max(r.monotonicity[ai], s[i] - s[i + 1]);
        }
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            r.convexity[ai] = std::max(r.convexity[ai], (s[i + 1] - s[i]) - (s[i] - s[i - 1]));
        }
        if (r.monotonicity[ai] > tol || r.convexity[ai] > tol) r.passed = false;
    }
    return r;
}

void write_table(std::ostream& out, const PwlValue& f) {
    const auto& grid = f.grid();
    const auto d = f.samples(Access::denied);
    const auto g = f.samples(Access::granted);
    out << "b\tA0\tA1\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << text::format_double(grid.point(i)) << '\t' << text::format_double(d[i]) << '\t'
            << text::format_double(g[i]) << '\n';
    }
}

PwlValue read_table(std::istream& in) {
    std::string line;
    bool have_header = false;
    std::vector<double> levels, denied, granted;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.empty()) {
            if (have_header) break;
            continue;
        }
        if (t.front() == '#') continue;
        if (!have_header) {
            const auto cols = text::split(t, '\t');
            if (cols.size() != 3 || cols[0] != "b" || cols[1] != "A0" || cols[2] != "A1") {
                throw ConfigError("value table: expected header 'b<TAB>A0<TAB>A1', got '" + std::string(t) + "'");
            }
            have_header = true;
            continue;
        }
        const auto cols = text::split(t, '\t');
        if (cols.size() != 3) throw ConfigError("value table: expected 3 columns in '" + std::string(t) + "'");
        levels.push_back(text::parse_double(cols[0], "battery level"));
        denied.push_back(text::parse_double(cols[1], "A0 value"));
        granted.push_back(text::parse_double(cols[2], "A1 value"));
    }
    if (!have_header) throw ConfigError("value table: missing header");
    if (levels.size() < 2) throw ConfigError("value table: need at least two grid rows");
    if (levels.front() != 0.0) throw ConfigError("value table: first battery level must be 0");
    const double delta = levels[1] - levels[0];
    BatteryGrid grid = [&] {
        try {
            return BatteryGrid(levels.back(), delta);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("value table: ") + e.what());
        }
    }();
    if (grid.size() != levels.size()) throw ConfigError("value table: row count does not match grid spacing");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (std::abs(levels[i] - grid.point(i)) > 1e-9 * std::max(1.0, grid.b_max())) {
            throw ConfigError("value table: non-uniform battery levels at row " + std::to_string(i + 1));
        }
    }
    try {
        return PwlValue(grid, std::move(denied), std::move(granted));
    } catch (const NumericError& e) {
        throw ConfigError(std::string("value table: ") + e.what());
    }
}

}  // namespace pwl
}  // namespace ehpa
