#include "lsparcom/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsparcom {

GridSpec::GridSpec(int low_side_, int factor_, double low_pitch_)
    : low_side(low_side_), factor(factor_), low_pitch(low_pitch_) {
    validate();
}

GridSpec GridSpec::from_sides(int low_side, int high_side, double low_pitch) {
    if (low_side < 1 || high_side < 1 || high_side % low_side != 0) {
        throw std::invalid_argument("GridSpec: high-res side must be a multiple of the low-res side");
    }
    return GridSpec(low_side, high_side / low_side, low_pitch);
}

void GridSpec::validate() const {
    if (low_side < 1) throw std::invalid_argument("GridSpec: low-res side must be >= 1");
    if (factor < 1) throw std::invalid_argument("GridSpec: upsampling factor must be >= 1");
    if (!(low_pitch > 0.0)) throw std::invalid_argument("GridSpec: pixel pitch must be positive");
}

// ---------------------------------------------------------------------------
// Psf

Psf Psf::gaussian(double sigma, int support_radius) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("Psf::gaussian: sigma must be positive");
    }
    Psf p;
    p.kind_ = Kind::gaussian;
    p.sigma_ = sigma;
    p.radius_ = support_radius > 0 ? support_radius : std::ceil(4.0 * sigma);
    return p;
}

Psf Psf::delta() {
    Psf p;
    p.kind_ = Kind::delta;
    p.radius_ = 0.5;
    return p;
}

Psf Psf::sampled(Image kernel) {
    if (kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0) {
        throw std::invalid_argument("Psf::sampled: kernel must be square with an odd side");
    }
    if ((kernel < 0.0).any() || !kernel.allFinite()) {
        throw std::invalid_argument("Psf::sampled: kernel entries must be finite and nonnegative");
    }
    const double peak = kernel.maxCoeff();
    if (!(peak > 0.0)) throw std::invalid_argument("Psf::sampled: kernel is all zero");
    Psf p;
    p.kind_ = Kind::sampled;
    p.table_ = kernel / peak;
    p.radius_ = static_cast<double>(kernel.rows() / 2);
    return p;
}

double Psf::value(double dy, double dx) const {
    switch (kind_) {
        case Kind::gaussian:
            if (std::abs(dy) > radius_ || std::abs(dx) > radius_) return 0.0;
            return std::exp(-(dy * dy + dx * dx) / (2.0 * sigma_ * sigma_));
        case Kind::delta:
            return (std::abs(dy) < 0.5 && std::abs(dx) < 0.5) ? 1.0 : 0.0;
        case Kind::sampled: {
            const double c = radius_;
            const double y = c + dy;
            const double x = c + dx;
            const double last = static_cast<double>(table_.rows() - 1);
            if (y < 0.0 || x < 0.0 || y > last || x > last) return 0.0;
            const auto y0 = static_cast<Eigen::Index>(std::floor(y));
            const auto x0 = static_cast<Eigen::Index>(std::floor(x));
            const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, table_.rows() - 1);
            const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, table_.cols() - 1);
            const double fy = y - static_cast<double>(y0);
            const double fx = x - static_cast<double>(x0);
            return (1 - fy) * ((1 - fx) * table_(y0, x0) + fx * table_(y0, x1)) +
                   fy * ((1 - fx) * table_(y1, x0) + fx * table_(y1, x1));
        }
    }
    return 0.0;
}

Image build_psf_kernel(const Psf& psf, const GridSpec& grid, bool on_high_res) {
    grid.validate();
    if (psf.kind() == Psf::Kind::delta) {
        return Image::Ones(1, 1);
    }
    const double step = on_high_res ? 1.0 / grid.factor : 1.0;
    const auto half = static_cast<Eigen::Index>(
        std::floor(psf.support_radius() / step + 1e-9));
    const Eigen::Index side = 2 * half + 1;
    Image k(side, side);
    for (Eigen::Index i = 0; i < side; ++i) {
        for (Eigen::Index j = 0; j < side; ++j) {
            k(i, j) = psf.value(static_cast<double>(i - half) * step,
                                static_cast<double>(j - half) * step);
        }
    }
    const double peak = k.maxCoeff();
    if (peak > 0.0) k /= peak;
    return k;
}

// ---------------------------------------------------------------------------
// MeasurementOperator

MeasurementOperator::MeasurementOperator(const Psf& psf, const GridSpec& grid, bool squared)
    : grid_(grid), squared_(squared) {
    grid_.validate();
    const int p = grid_.factor;
    const double phase = 0.5 * (p - 1);
    // m*P - i = t  <=>  offset (low-res units) = (t + (P - 1) / 2) / P
    const double reach = psf.support_radius() * p;
    const int lo = static_cast<int>(std::floor(-reach - phase)) - 1;
    const int hi = static_cast<int>(std::ceil(reach - phase)) + 1;
    tap_origin_ = lo;
    const int side = hi - lo + 1;
    taps_.resize(side, side);
    for (int a = 0; a < side; ++a) {
        const double dy = (lo + a + phase) / p;
        for (int b = 0; b < side; ++b) {
            const double dx = (lo + b + phase) / p;
            const double u = psf.value(dy, dx);
            taps_(a, b) = squared_ ? u * u : u;
        }
    }
}

MeasurementOperator MeasurementOperator::convolutional(const Psf& psf, const GridSpec& grid,
                                                       bool squared) {
    MeasurementOperator op(psf, grid, squared);
    op.form_ = Form::convolutional;
    return op;
}

MeasurementOperator MeasurementOperator::explicit_matrix(const Psf& psf, const GridSpec& grid,
                                                         bool squared, int size_cap) {
    grid.validate();
    if (grid.low_side > size_cap) {
        throw std::length_error("explicit measurement matrix refused: M exceeds the size cap");
    }
    MeasurementOperator op(psf, grid, squared);
    op.form_ = Form::explicit_matrix;
    const int m_side = grid.low_side;
    const int n_side = grid.high_side();
    const double p = grid.factor;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(grid.low_pixels(), grid.high_pixels());
    for (int iy = 0; iy < n_side; ++iy) {
        for (int ix = 0; ix < n_side; ++ix) {
            const Eigen::Index col = Eigen::Index{iy} * n_side + ix;
            const double ey = (iy + 0.5) / p;
            const double ex = (ix + 0.5) / p;
            for (int my = 0; my < m_side; ++my) {
                for (int mx = 0; mx < m_side; ++mx) {
                    const double u = psf.value((my + 0.5) - ey, (mx + 0.5) - ex);
                    a(Eigen::Index{my} * m_side + mx, col) = squared ? u * u : u;
                }
            }
        }
    }
    op.matrix_ = std::move(a);
    return op;
}

const Eigen::MatrixXd& MeasurementOperator::matrix() const {
    if (!matrix_) throw std::logic_error("MeasurementOperator: no explicit matrix for this form");
    return *matrix_;
}

void MeasurementOperator::forward_conv(const double* x, double* y) const {
    const int m_side = grid_.low_side;
    const int n_side = grid_.high_side();
    const int p = grid_.factor;
    const auto side = static_cast<int>(taps_.rows());
    for (int my = 0; my < m_side; ++my) {
        for (int mx = 0; mx < m_side; ++mx) {
            double acc = 0.0;
            for (int a = 0; a < side; ++a) {
                const int iy = my * p - (tap_origin_ + a);
                if (iy < 0 || iy >= n_side) continue;
                for (int b = 0; b < side; ++b) {
                    const int ix = mx * p - (tap_origin_ + b);
                    if (ix < 0 || ix >= n_side) continue;
                    acc += taps_(a, b) * x[iy * n_side + ix];
                }
            }
            y[my * m_side + mx] = acc;
        }
    }
}

void MeasurementOperator::adjoint_conv(const double* y, double* x) const {
    const int m_side = grid_.low_side;
    const int n_side = grid_.high_side();
    const int p = grid_.factor;
    const auto side = static_cast<int>(taps_.rows());
    std::fill(x, x + Eigen::Index{n_side} * n_side, 0.0);
    for (int my = 0; my < m_side; ++my) {
        for (int mx = 0; mx < m_side; ++mx) {
            const double v = y[my * m_side + mx];
            if (v == 0.0) continue;
            for (int a = 0; a < side; ++a) {
                const int iy = my * p - (tap_origin_ + a);
                if (iy < 0 || iy >= n_side) continue;
                for (int b = 0; b < side; ++b) {
                    const int ix = mx * p - (tap_origin_ + b);
                    if (ix < 0 || ix >= n_side) continue;
                    x[iy * n_side + ix] += taps_(a, b) * v;
                }
            }
        }
    }
}

Eigen::VectorXd MeasurementOperator::forward(const Eigen::VectorXd& x) const {
    if (x.size() != grid_.high_pixels()) {
        throw std::invalid_argument("apply_forward: input does not match the high-res grid");
    }
    if (form_ == Form::explicit_matrix) return (*matrix_) * x;
    Eigen::VectorXd y(grid_.low_pixels());
    forward_conv(x.data(), y.data());
    return y;
}

Image MeasurementOperator::forward(const Image& x) const {
    if (x.rows() != grid_.high_side() || x.cols() != grid_.high_side()) {
        throw std::invalid_argument("apply_forward: input does not match the high-res grid");
    }
    Image y(grid_.low_side, grid_.low_side);
    if (form_ == Form::explicit_matrix) {
        Eigen::Map<Eigen::VectorXd>(y.data(), y.size()) = (*matrix_) * as_vector(x);
    } else {
        forward_conv(x.data(), y.data());
    }
    return y;
}

Eigen::VectorXd MeasurementOperator::adjoint(const Eigen::VectorXd& y) const {
    if (y.size() != grid_.low_pixels()) {
        throw std::invalid_argument("apply_adjoint: input does not match the low-res grid");
    }
    if (form_ == Form::explicit_matrix) return matrix_->transpose() * y;
    Eigen::VectorXd x(grid_.high_pixels());
    adjoint_conv(y.data(), x.data());
    return x;
}

Image MeasurementOperator::adjoint(const Image& y) const {
    if (y.rows() != grid_.low_side || y.cols() != grid_.low_side) {
        throw std::invalid_argument("apply_adjoint: input does not match the low-res grid");
    }
    Image x(grid_.high_side(), grid_.high_side());
    if (form_ == Form::explicit_matrix) {
        Eigen::Map<Eigen::VectorXd>(x.data(), x.size()) = matrix_->transpose() * as_vector(y);
    } else {
        adjoint_conv(y.data(), x.data());
    }
    return x;
}

Image MeasurementOperator::column(Eigen::Index l) const {
    if (l < 0 || l >= grid_.high_pixels()) throw std::out_of_range("column index out of range");
    Image e = Image::Zero(grid_.high_side(), grid_.high_side());
    e.data()[l] = 1.0;
    return forward(e);
}

// ---------------------------------------------------------------------------

EmitterMap::EmitterMap(Image v, std::vector<EmitterPoint> pts)
    : values(std::move(v)), points(std::move(pts)) {
    if (values.size() > 0 && (values < 0.0).any()) {
        throw std::domain_error("EmitterMap: values must be nonnegative");
    }
}

Image gram_kernel(const Psf& psf, const GridSpec& grid) {
    grid.validate();
    const int p = grid.factor;
    const double radius = psf.support_radius();
    const int reach_low = static_cast<int>(std::ceil(radius));
    const int half = static_cast<int>(std::ceil(2.0 * radius * p));
    const int side = 2 * half + 1;
    Image k = Image::Zero(side, side);
    for (int dy = -reach_low; dy <= reach_low; ++dy) {
        for (int dx = -reach_low; dx <= reach_low; ++dx) {
            const double ul = psf.value(dy, dx);
            if (ul == 0.0) continue;
            const double wl = ul * ul;
            for (int a = -half; a <= half; ++a) {
                for (int b = -half; b <= half; ++b) {
                    const double uh = psf.value(dy - static_cast<double>(a) / p,
                                                dx - static_cast<double>(b) / p);
                    k(a + half, b + half) += wl * uh * uh;
                }
            }
        }
    }
    return k;
}

TheoreticalKernels theoretical_kernels(const Psf& psf, const GridSpec& grid, int wi_side,
                                       int wp_side) {
    const Image h = build_psf_kernel(psf, grid, true);
    TheoreticalKernels out;
    out.w_i = center_crop_or_pad(h.square(), wi_side);
    out.w_p = center_crop_or_pad(gram_kernel(psf, grid), wp_side);
    return out;
}

}  // namespace lsparcom
