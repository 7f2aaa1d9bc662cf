#include "bslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace bslab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double positive_fmod(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    // fmod can return exactly `period` after the correction when x is a tiny
    // negative number.
    if (r >= period) r -= period;
    return r;
}

double gaussian_pdf(double u, double t) {
    return std::exp(-u * u / (2.0 * t)) / std::sqrt(kTwoPi * t);
}

void check_dim(const FlatGeometry& g, const Point& x, const char* where) {
    if (static_cast<int>(x.size()) != g.dim()) {
        std::ostringstream msg;
        msg << where << ": point has dimension " << x.size() << ", geometry has "
            << g.dim();
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

std::string to_string(GeometryKind kind) {
    switch (kind) {
        case GeometryKind::Circle: return "circle";
        case GeometryKind::Torus: return "torus";
        case GeometryKind::Interval: return "interval";
        case GeometryKind::Box: return "box";
        case GeometryKind::EuclideanGaussian: return "euclidean_gaussian";
    }
    return "unknown";
}

FlatGeometry::FlatGeometry(GeometryKind kind, int dim, std::vector<double> lengths)
    : kind_(kind), dim_(dim), lengths_(std::move(lengths)) {
    if (dim_ <= 0) throw std::invalid_argument("FlatGeometry: dim must be positive");
    if (kind_ == GeometryKind::EuclideanGaussian) {
        if (!lengths_.empty())
            throw std::invalid_argument("FlatGeometry: euclidean kind carries no lengths");
    } else {
        if (static_cast<int>(lengths_.size()) != dim_)
            throw std::invalid_argument("FlatGeometry: need one length per axis");
        for (double length : lengths_)
            if (!(length > 0.0))
                throw std::invalid_argument("FlatGeometry: lengths must be positive");
    }
}

FlatGeometry FlatGeometry::circle(double length) {
    return FlatGeometry(GeometryKind::Circle, 1, {length});
}

FlatGeometry FlatGeometry::torus(std::vector<double> lengths) {
    const int n = static_cast<int>(lengths.size());
    return FlatGeometry(GeometryKind::Torus, n, std::move(lengths));
}

FlatGeometry FlatGeometry::interval(double length) {
    return FlatGeometry(GeometryKind::Interval, 1, {length});
}

FlatGeometry FlatGeometry::box(std::vector<double> lengths) {
    const int n = static_cast<int>(lengths.size());
    return FlatGeometry(GeometryKind::Box, n, std::move(lengths));
}

FlatGeometry FlatGeometry::euclidean_gaussian(int dim) {
    return FlatGeometry(GeometryKind::EuclideanGaussian, dim, {});
}

double FlatGeometry::lebesgue_volume() const {
    if (!compact())
        throw UnsupportedGeometryError("lebesgue_volume: euclidean kind is not compact");
    double v = 1.0;
    for (double length : lengths_) v *= length;
    return v;
}

bool FlatGeometry::contains(const Point& x, double tol) const {
    if (static_cast<int>(x.size()) != dim_) return false;
    if (kind_ == GeometryKind::EuclideanGaussian) return true;
    for (int a = 0; a < dim_; ++a) {
        if (periodic()) {
            if (!std::isfinite(x[a])) return false;
        } else {
            if (x[a] < -tol || x[a] > lengths_[a] + tol) return false;
        }
    }
    return true;
}

Point wrap(const Point& x, const FlatGeometry& g) {
    if (!g.periodic())
        throw UnsupportedGeometryError("wrap: geometry " + to_string(g.kind()) +
                                       " is not periodic");
    check_dim(g, x, "wrap");
    Point y(x.size());
    for (int a = 0; a < g.dim(); ++a) y[a] = positive_fmod(x[a], g.length(a));
    return y;
}

// ---------------------------------------------------------------------------
// Reflection groups
// ---------------------------------------------------------------------------

Point GroupElement::apply(const FlatGeometry& covering, const Point& x) const {
    Point y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = positive_fmod(sign[k] * x[perm[k]] + offset[k],
                             covering.length(static_cast<int>(k)));
    }
    return y;
}

GroupElement GroupElement::compose(const FlatGeometry& covering,
                                   const GroupElement& other) const {
    // (this ∘ other)(x) = this(other(x)).
    const std::size_t n = perm.size();
    GroupElement out;
    out.perm.resize(n);
    out.sign.resize(n);
    out.offset.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // this: y_k = s_k x_{p_k} + o_k, other: x_j = s'_j z_{p'_j} + o'_j
        out.perm[k] = other.perm[perm[k]];
        out.sign[k] = sign[k] * other.sign[perm[k]];
        out.offset[k] = positive_fmod(sign[k] * other.offset[perm[k]] + offset[k],
                                      covering.length(static_cast<int>(k)));
    }
    return out;
}

bool GroupElement::is_identity() const {
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] != static_cast<int>(k) || sign[k] != 1.0 || offset[k] != 0.0)
            return false;
    }
    return true;
}

namespace {

std::string element_key(const GroupElement& e) {
    std::ostringstream key;
    for (std::size_t k = 0; k < e.perm.size(); ++k) {
        key << e.perm[k] << (e.sign[k] > 0 ? '+' : '-');
        // Offsets generated here are lattice-commensurate; round to kill the
        // fmod noise before keying.
        key << std::llround(e.offset[k] * 1e9) << '|';
    }
    return key.str();
}

}  // namespace

ReflectionGroup ReflectionGroup::generate(const FlatGeometry& covering,
                                          const std::vector<int>& reflection_axes,
                                          bool coordinate_swap) {
    if (!covering.periodic())
        throw UnsupportedGeometryError("ReflectionGroup: covering space must be a torus");
    const int n = covering.dim();

    GroupElement identity;
    identity.perm.resize(n);
    identity.sign.assign(n, 1.0);
    identity.offset.assign(n, 0.0);
    for (int k = 0; k < n; ++k) identity.perm[k] = k;

    std::vector<GroupElement> generators;
    for (int axis : reflection_axes) {
        if (axis < 0 || axis >= n)
            throw std::out_of_range("ReflectionGroup: reflection axis out of range");
        GroupElement r = identity;
        r.sign[axis] = -1.0;
        generators.push_back(r);
    }
    if (coordinate_swap) {
        if (n < 2)
            throw std::invalid_argument("ReflectionGroup: swap needs at least 2 axes");
        if (covering.length(0) != covering.length(1))
            throw std::invalid_argument(
                "ReflectionGroup: swap requires equal lengths on the first two axes");
        GroupElement s = identity;
        s.perm[0] = 1;
        s.perm[1] = 0;
        generators.push_back(s);
    }

    // BFS closure.
    ReflectionGroup group;
    group.reflection_axes_ = reflection_axes;
    group.swap_ = coordinate_swap;
    std::map<std::string, std::size_t> seen;
    group.elements_.push_back(identity);
    seen[element_key(identity)] = 0;
    std::size_t head = 0;
    while (head < group.elements_.size()) {
        const GroupElement current = group.elements_[head++];
        for (const GroupElement& gen : generators) {
            GroupElement next = gen.compose(covering, current);
            const std::string key = element_key(next);
            if (!seen.count(key)) {
                seen[key] = group.elements_.size();
                group.elements_.push_back(std::move(next));
                if (group.elements_.size() > 1024)
                    throw std::runtime_error("ReflectionGroup: closure did not terminate");
            }
        }
    }
    return group;
}

const GroupElement& ReflectionGroup::element(std::size_t g) const {
    if (g >= elements_.size())
        throw std::out_of_range("ReflectionGroup: element index out of range");
    return elements_[g];
}

bool ReflectionGroup::is_closed(const FlatGeometry& covering) const {
    std::map<std::string, bool> table;
    for (const auto& e : elements_) table[element_key(e)] = true;
    for (const auto& a : elements_)
        for (const auto& b : elements_)
            if (!table.count(element_key(a.compose(covering, b)))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Quotients
// ---------------------------------------------------------------------------

QuotientMap::QuotientMap(FlatGeometry covering, ReflectionGroup group,
                         FlatGeometry quotient, QuotientKind kind)
    : covering_(std::move(covering)),
      group_(std::move(group)),
      quotient_(std::move(quotient)),
      quotient_kind_(kind) {}

QuotientMap QuotientMap::box_quotient(const FlatGeometry& covering_torus) {
    if (!covering_torus.periodic())
        throw UnsupportedGeometryError("box_quotient: covering must be a torus");
    std::vector<int> axes(covering_torus.dim());
    std::vector<double> half(covering_torus.dim());
    for (int a = 0; a < covering_torus.dim(); ++a) {
        axes[a] = a;
        half[a] = covering_torus.length(a) / 2.0;
    }
    ReflectionGroup group = ReflectionGroup::generate(covering_torus, axes, false);
    FlatGeometry quotient = covering_torus.dim() == 1 ? FlatGeometry::interval(half[0])
                                                      : FlatGeometry::box(half);
    return QuotientMap(covering_torus, std::move(group), std::move(quotient),
                       QuotientKind::Box);
}

QuotientMap QuotientMap::triangle_quotient(const FlatGeometry& covering_torus) {
    if (!covering_torus.periodic() || covering_torus.dim() != 2)
        throw UnsupportedGeometryError("triangle_quotient: covering must be a 2d torus");
    if (covering_torus.length(0) != covering_torus.length(1))
        throw std::invalid_argument("triangle_quotient: covering torus must be square");
    const double half = covering_torus.length(0) / 2.0;
    ReflectionGroup group = ReflectionGroup::generate(covering_torus, {0, 1}, true);
    return QuotientMap(covering_torus, std::move(group),
                       FlatGeometry::box({half, half}),
                       QuotientKind::IsoscelesRightTriangle);
}

bool QuotientMap::in_fundamental_domain(const Point& x, double tol) const {
    if (static_cast<int>(x.size()) != covering_.dim()) return false;
    for (int a = 0; a < quotient_.dim(); ++a)
        if (x[a] < -tol || x[a] > quotient_.length(a) + tol) return false;
    if (quotient_kind_ == QuotientKind::IsoscelesRightTriangle && x[1] > x[0] + tol)
        return false;
    return true;
}

Point fold(const Point& x, const QuotientMap& q) {
    Point y = wrap(x, q.covering());
    for (int a = 0; a < q.covering().dim(); ++a) {
        const double half = q.covering().length(a) / 2.0;
        if (y[a] > half) y[a] = q.covering().length(a) - y[a];
    }
    if (q.quotient_kind() == QuotientKind::IsoscelesRightTriangle && y[1] > y[0])
        std::swap(y[0], y[1]);
    return y;
}

Point lift(const Point& x, std::size_t g, const QuotientMap& q) {
    check_dim(q.covering(), x, "lift");
    return q.group().element(g).apply(q.covering(), x);
}

// ---------------------------------------------------------------------------
// Log map and normals
// ---------------------------------------------------------------------------

bool log_map_checked(const Point& x, const Point& y, const FlatGeometry& g,
                     Point& out) {
    out.resize(x.size());
    for (int a = 0; a < g.dim(); ++a) {
        double d = y[a] - x[a];
        if (g.periodic()) {
            const double length = g.length(a);
            d -= length * std::nearbyint(d / length);
            if (std::abs(std::abs(d) - length / 2.0) <= 1e-12 * length) return false;
        }
        out[a] = d;
    }
    return true;
}

Point log_map(const Point& x, const Point& y, const FlatGeometry& g) {
    check_dim(g, x, "log_map");
    check_dim(g, y, "log_map");
    Point out;
    if (!log_map_checked(x, y, g, out))
        throw CutLocusError("log_map: target lies on the cut locus of the base point");
    return out;
}

std::optional<Point> inward_normal(const Point& x, const FlatGeometry& g) {
    if (!g.has_boundary())
        throw UnsupportedGeometryError("inward_normal: geometry has no boundary");
    check_dim(g, x, "inward_normal");
    int active_axis = -1;
    double direction = 0.0;
    int active_count = 0;
    for (int a = 0; a < g.dim(); ++a) {
        if (x[a] == 0.0) {
            ++active_count;
            active_axis = a;
            direction = 1.0;
        } else if (x[a] == g.length(a)) {
            ++active_count;
            active_axis = a;
            direction = -1.0;
        }
    }
    if (active_count == 0) return std::nullopt;
    if (active_count > 1)
        throw CornerPointError("inward_normal: corner point has no normal");
    Point nu(x.size(), 0.0);
    nu[active_axis] = direction;
    return nu;
}

// ---------------------------------------------------------------------------
// Heat kernels
// ---------------------------------------------------------------------------

int image_count(double t, double period, const HeatKernelParams& params) {
    if (!(params.tail_tolerance > 0.0))
        throw std::invalid_argument("HeatKernelParams: tail_tolerance must be positive");
    const double radius = std::sqrt(2.0 * t * std::log(1.0 / params.tail_tolerance));
    const int k = static_cast<int>(std::ceil(radius / period)) + 1;
    return std::min(k, params.max_images);
}

double wrapped_gaussian_1d(double d, double t, double period,
                           const HeatKernelParams& params) {
    const int K = image_count(t, period, params);
    // |d| keeps the sum bitwise symmetric under d -> -d.
    d = std::abs(d);
    double sum = 0.0;
    for (int k = -K; k <= K; ++k) sum += gaussian_pdf(d + k * period, t);
    return sum;
}

double neumann_kernel_1d(double x, double y, double t, double length,
                         const HeatKernelParams& params) {
    const int K = image_count(t, 2.0 * length, params);
    const double diff = std::abs(y - x);  // bitwise symmetry in (x, y)
    const double sum_xy = x + y;
    double sum = 0.0;
    for (int k = -K; k <= K; ++k) {
        sum += gaussian_pdf(diff + 2.0 * k * length, t);
        sum += gaussian_pdf(sum_xy + 2.0 * k * length, t);
    }
    return sum;
}

double heat_kernel(const FlatGeometry& g, double t, const Point& x, const Point& y,
                   const HeatKernelParams& params) {
    if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be positive");
    check_dim(g, x, "heat_kernel");
    check_dim(g, y, "heat_kernel");
    double density = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
        switch (g.kind()) {
            case GeometryKind::Circle:
            case GeometryKind::Torus:
                density *= wrapped_gaussian_1d(y[a] - x[a], t, g.length(a), params);
                break;
            case GeometryKind::Interval:
            case GeometryKind::Box:
                density *= neumann_kernel_1d(x[a], y[a], t, g.length(a), params);
                break;
            case GeometryKind::EuclideanGaussian:
                density *= gaussian_pdf(y[a] - x[a], t);
                break;
        }
    }
    return density;
}

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

// Antiderivative helper: Psi(z) = int_{-inf}^z Phi(s / sqrt(t)) ds.
double cdf_antiderivative(double z, double t) {
    return z * std_normal_cdf(z / std::sqrt(t)) + t * gaussian_pdf(z, t);
}

// Psi(z) - z for z >= 0; decays like the Gaussian tail, so second
// differences of it avoid the cancellation that Psi itself suffers far from
// the diagonal.
double cdf_antiderivative_tail(double z, double t) {
    return t * gaussian_pdf(z, t) - z * std_normal_cdf(-z / std::sqrt(t));
}

// Double integral of phi_t(v - u + w) over u, v in [0, dx]^2 (closed form,
// even in w).
double cell_pair_mass(double w, double dx, double t) {
    w = std::abs(w);
    if (w >= dx) {
        return cdf_antiderivative_tail(w + dx, t) -
               2.0 * cdf_antiderivative_tail(w, t) +
               cdf_antiderivative_tail(w - dx, t);
    }
    return cdf_antiderivative(w + dx, t) - 2.0 * cdf_antiderivative(w, t) +
           cdf_antiderivative(w - dx, t);
}

}  // namespace

double cell_averaged_kernel_1d(int i, int j, int m, double length, bool is_periodic,
                               double t, const HeatKernelParams& params) {
    if (!(t > 0.0)) throw std::domain_error("cell_averaged_kernel_1d: t must be positive");
    if (m < 2) throw std::invalid_argument("cell_averaged_kernel_1d: need at least 2 cells");
    const double dx = length / m;
    double mass = 0.0;
    if (is_periodic) {
        const int K = image_count(t, length, params);
        for (int k = -K; k <= K; ++k)
            mass += cell_pair_mass((j - i) * dx + k * length, dx, t);
    } else {
        const int K = image_count(t, 2.0 * length, params);
        for (int k = -K; k <= K; ++k) {
            mass += cell_pair_mass((j - i) * dx + 2.0 * k * length, dx, t);
            // Reflected family phi_t(y + x + 2kL): flipping x maps it onto the
            // same closed form with the shifted offset below.
            mass += cell_pair_mass((i + j + 1) * dx + 2.0 * k * length, dx, t);
        }
    }
    return mass / dx;
}

}  // namespace bslab
