#ifndef BSLAB_GEOMETRY_HPP
#define BSLAB_GEOMETRY_HPP

#include <optional>
#include <string>
#include <vector>

#include "bslab/errors.hpp"

namespace bslab {

using Point = std::vector<double>;

enum class GeometryKind { Circle, Torus, Interval, Box, EuclideanGaussian };

std::string to_string(GeometryKind kind);

/// Flat state space: circle, flat torus, interval, box, or Gaussian-weighted
/// Euclidean space. Periodic kinds carry period lengths, reflecting kinds
/// side lengths; the Euclidean kind carries only a dimension.
class FlatGeometry {
public:
    static FlatGeometry circle(double length);
    static FlatGeometry torus(std::vector<double> lengths);
    static FlatGeometry interval(double length);
    static FlatGeometry box(std::vector<double> lengths);
    static FlatGeometry euclidean_gaussian(int dim);

    GeometryKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::vector<double>& lengths() const { return lengths_; }
    double length(int axis) const { return lengths_.at(axis); }

    bool periodic() const {
        return kind_ == GeometryKind::Circle || kind_ == GeometryKind::Torus;
    }
    bool has_boundary() const {
        return kind_ == GeometryKind::Interval || kind_ == GeometryKind::Box;
    }
    bool compact() const { return kind_ != GeometryKind::EuclideanGaussian; }

    /// Total Lebesgue measure; defined for compact kinds only.
    double lebesgue_volume() const;

    /// Point has the right dimension and, on bounded kinds, lies in the domain.
    bool contains(const Point& x, double tol = 1e-9) const;

    bool operator==(const FlatGeometry& other) const {
        return kind_ == other.kind_ && dim_ == other.dim_ &&
               lengths_ == other.lengths_;
    }
    bool operator!=(const FlatGeometry& other) const { return !(*this == other); }

private:
    FlatGeometry(GeometryKind kind, int dim, std::vector<double> lengths);

    GeometryKind kind_;
    int dim_;
    std::vector<double> lengths_;  // empty for EuclideanGaussian
};

/// Signed-permutation-plus-offset isometry of a flat torus:
///   y[k] = sign[k] * x[perm[k]] + offset[k]   (mod L[k]).
struct GroupElement {
    std::vector<int> perm;
    std::vector<double> sign;
    std::vector<double> offset;

    Point apply(const FlatGeometry& covering, const Point& x) const;
    GroupElement compose(const FlatGeometry& covering, const GroupElement& other) const;
    bool is_identity() const;
};

/// Finite group of torus isometries generated by axis reflections and an
/// optional coordinate swap. Element 0 is always the identity.
class ReflectionGroup {
public:
    /// `reflection_axes` lists the axes reflected through x_a = 0; the swap
    /// exchanges the first two coordinates (requires equal lengths).
    static ReflectionGroup generate(const FlatGeometry& covering,
                                    const std::vector<int>& reflection_axes,
                                    bool coordinate_swap);

    const std::vector<GroupElement>& elements() const { return elements_; }
    const GroupElement& element(std::size_t g) const;
    std::size_t size() const { return elements_.size(); }

    /// Composing any two stored elements lands on a stored element.
    bool is_closed(const FlatGeometry& covering) const;

    const std::vector<int>& reflection_axes() const { return reflection_axes_; }
    bool has_swap() const { return swap_; }

private:
    std::vector<GroupElement> elements_;
    std::vector<int> reflection_axes_;
    bool swap_ = false;
};

enum class QuotientKind { Box, IsoscelesRightTriangle };

/// Fold/lift machinery between a covering torus and its reflection-group
/// quotient. Supported quotients: axis-aligned boxes (torus lengths halved)
/// and the isosceles right triangle (square box + diagonal swap).
class QuotientMap {
public:
    static QuotientMap box_quotient(const FlatGeometry& covering_torus);
    static QuotientMap triangle_quotient(const FlatGeometry& covering_torus);

    const FlatGeometry& covering() const { return covering_; }
    const ReflectionGroup& group() const { return group_; }
    QuotientKind quotient_kind() const { return quotient_kind_; }

    /// Quotient geometry; for the triangle this is the bounding square box.
    const FlatGeometry& quotient() const { return quotient_; }

    bool in_fundamental_domain(const Point& x, double tol = 1e-12) const;

    friend Point fold(const Point& x, const QuotientMap& q);
    friend Point lift(const Point& x, std::size_t g, const QuotientMap& q);

private:
    QuotientMap(FlatGeometry covering, ReflectionGroup group, FlatGeometry quotient,
                QuotientKind kind);

    FlatGeometry covering_;
    ReflectionGroup group_;
    FlatGeometry quotient_;
    QuotientKind quotient_kind_;
};

/// Truncation policy for image sums. The per-axis image count is
/// ceil(sqrt(2 t ln(1/tail_tolerance)) / L) + 1, capped at max_images.
struct HeatKernelParams {
    double tail_tolerance = 1e-12;
    int max_images = 64;
};

int image_count(double t, double period, const HeatKernelParams& params);

/// Canonical representative with coordinates in [0, L_i) per axis.
/// Only periodic geometries support wrapping.
Point wrap(const Point& x, const FlatGeometry& g);

/// Quotient map: any covering-torus point to its fundamental-domain
/// representative. Total.
Point fold(const Point& x, const QuotientMap& q);

/// Inverse of fold along a chosen group element: the image g·x.
Point lift(const Point& x, std::size_t g, const QuotientMap& q);

/// Shortest displacement v with x + v = y (mod wrapping). Throws
/// CutLocusError when the displacement on a periodic axis is exactly half
/// the period.
Point log_map(const Point& x, const Point& y, const FlatGeometry& g);

/// Variant without exceptions for hot loops; returns false at the cut locus.
bool log_map_checked(const Point& x, const Point& y, const FlatGeometry& g,
                     Point& out);

/// Heat-kernel transition density with respect to Lebesgue measure, with the
/// convention that increments over time t have variance t per axis. Periodic
/// axes use the wrapped-Gaussian image sum, reflecting axes the Neumann
/// method of images, the Euclidean kind the free Gaussian kernel. For
/// unit-volume geometries this equals the density with respect to the
/// normalised volume.
double heat_kernel(const FlatGeometry& g, double t, const Point& x, const Point& y,
                   const HeatKernelParams& params = {});

/// Unit inward normal at regular boundary points; std::nullopt in the
/// interior; CornerPointError where two or more faces meet.
std::optional<Point> inward_normal(const Point& x, const FlatGeometry& g);

// Per-axis kernels, exposed for quadrature oracles and kernel discretisation.

/// 1D wrapped Gaussian: sum of phi_t(d + kL) over images.
double wrapped_gaussian_1d(double d, double t, double period,
                           const HeatKernelParams& params = {});

/// 1D Neumann kernel on [0, L] by reflection images.
double neumann_kernel_1d(double x, double y, double t, double length,
                         const HeatKernelParams& params = {});

/// Exact cell-averaged 1D transition probability from cell i (uniform
/// within) to cell j on a uniform m-cell grid:
/// (1/dx) int_{cell_i} int_{cell_j} k_t(x,y) dy dx, in closed form per
/// Gaussian image. Rows sum to one up to the image-tail tolerance and the
/// matrix is symmetric.
double cell_averaged_kernel_1d(int i, int j, int m, double length, bool is_periodic,
                               double t, const HeatKernelParams& params = {});

}  // namespace bslab

#endif  // BSLAB_GEOMETRY_HPP
