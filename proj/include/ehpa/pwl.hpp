#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ehpa {

/// Channel-access permission granted by the control center for one slot.
enum class Access : std::uint8_t { denied = 0, granted = 1 };

constexpr std::size_t index_of(Access a) { return static_cast<std::size_t>(a); }

/// Converts 0/1 to Access; anything else is a DomainError.
Access access_from_int(long value);

/// Uniform battery grid {0, delta, 2 delta, ..., b_max}. b_max must be an
/// integer multiple of delta.
class BatteryGrid {
public:
    BatteryGrid(double b_max, double delta);

    double b_max() const { return b_max_; }
    double delta() const { return delta_; }
    std::size_t size() const { return count_; }

    /// Grid level i; the last level is exactly b_max.
    double point(std::size_t i) const {
        return i + 1 == count_ ? b_max_ : static_cast<double>(i) * delta_;
    }

    /// Largest index i with point(i) <= b (b clamped to [0, b_max]).
    std::size_t floor_index(double b) const;
    /// Index of the grid level closest to b (b clamped to [0, b_max]).
    std::size_t nearest_index(double b) const;

    bool operator==(const BatteryGrid& other) const {
        return count_ == other.count_ && b_max_ == other.b_max_ && delta_ == other.delta_;
    }

private:
    double b_max_;
    double delta_;
    std::size_t count_;
};

/// Concave piecewise-linear value function over the battery level, one
/// branch per access state. Linear interpolation between grid samples and
/// constant continuation above b_max.
class PwlValue {
public:
    PwlValue(BatteryGrid grid, std::vector<double> denied, std::vector<double> granted);

    static PwlValue zero(const BatteryGrid& grid);

    const BatteryGrid& grid() const { return grid_; }
    std::span<const double> samples(Access a) const { return samples_[index_of(a)]; }

    /// Throws DomainError for b < 0 (or NaN). Exact at grid points.
    double operator()(double b, Access a) const;

private:
    BatteryGrid grid_;
    std::array<std::vector<double>, 2> samples_;
};

namespace pwl {

double eval(const PwlValue& f, double b, Access a);

/// max over A and grid points of |f - g|. Grids must match.
double sup_distance(const PwlValue& f, const PwlValue& g);

struct ShapeReport {
    double tolerance = 0.0;
    /// Largest sample[i] - sample[i+1] per access state (0 if monotone).
    std::array<double, 2> monotonicity{0.0, 0.0};
    /// Largest positive second difference per access state.
    std::array<double, 2> convexity{0.0, 0.0};
    bool passed = true;
};

ShapeReport shape_check(const PwlValue& f, double tol = 1e-9);

/// Tab-separated table: header "b<TAB>A0<TAB>A1", one row per grid level,
/// values written with 17 significant digits.
void write_table(std::ostream& out, const PwlValue& f);
/// Reads the format produced by write_table; throws ConfigError on malformed input.
PwlValue read_table(std::istream& in);

}  // namespace pwl
}  // namespace ehpa
