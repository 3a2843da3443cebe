#include "lsparcom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "lsparcom/fft_conv.hpp"

namespace lsparcom {

void FrameStack::validate() const {
    for (const auto& f : frames) {
        if (f.rows() != rows() || f.cols() != cols()) {
            throw std::invalid_argument("FrameStack: frames differ in shape");
        }
    }
}

FrameStack normalize_stack(const FrameStack& stack, double& scale) {
    if (stack.frames.empty()) throw std::invalid_argument("normalize_stack: empty stack");
    stack.validate();
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& f : stack.frames) peak = std::max(peak, f.maxCoeff());
    if (!(peak > 0.0)) {
        throw std::domain_error("normalize_stack: movie maximum is not positive (all-zero movie?)");
    }
    FrameStack out = stack;
    for (auto& f : out.frames) f /= peak;
    scale = peak;
    return out;
}

FrameStack normalize_stack(const FrameStack& stack) {
    double scale = 0.0;
    return normalize_stack(stack, scale);
}

FrameStack remove_temporal_median(const FrameStack& stack) {
    stack.validate();
    FrameStack out = stack;
    const std::size_t t = stack.size();
    if (t == 0) return out;
    const Eigen::Index n = stack.frames.front().size();
    std::vector<double> trace(t);
    for (Eigen::Index px = 0; px < n; ++px) {
        for (std::size_t k = 0; k < t; ++k) trace[k] = stack.frames[k].data()[px];
        const std::size_t mid = t / 2;
        std::nth_element(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(mid),
                         trace.end());
        double med = trace[mid];
        if (t % 2 == 0) {
            const double lower =
                *std::max_element(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(mid));
            med = 0.5 * (lower + med);
        }
        for (std::size_t k = 0; k < t; ++k) out.frames[k].data()[px] -= med;
    }
    return out;
}

FrameStack preprocess(const FrameStack& stack) {
    return remove_temporal_median(normalize_stack(stack));
}

VarianceImage temporal_variance(const FrameStack& stack) {
    if (stack.size() < 2) throw std::invalid_argument("temporal_variance: need at least 2 frames");
    stack.validate();
    const double inv_t = 1.0 / static_cast<double>(stack.size());
    Image mean = Image::Zero(stack.rows(), stack.cols());
    for (const auto& f : stack.frames) mean += f;
    mean *= inv_t;
    Image acc = Image::Zero(stack.rows(), stack.cols());
    for (const auto& f : stack.frames) acc += (f - mean).square();
    VarianceImage out;
    out.values = (acc * inv_t).max(0.0);
    out.provenance = VarianceImage::Provenance::raw;
    return out;
}

Image resize_to_high_res(const Image& img, int factor) {
    if (factor < 1) throw std::invalid_argument("resize_to_high_res: factor must be >= 1");
    if (factor == 1) return img;
    const Eigen::Index rows = img.rows();
    const Eigen::Index cols = img.cols();
    auto sample_axis = [factor](Eigen::Index j, Eigen::Index n, Eigen::Index& i0, Eigen::Index& i1,
                                double& w) {
        double u = (static_cast<double>(j) + 0.5) / factor - 0.5;
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<Eigen::Index>(std::floor(u));
        i1 = std::min(i0 + 1, n - 1);
        w = u - static_cast<double>(i0);
    };
    Image out(rows * factor, cols * factor);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        Eigen::Index r0, r1;
        double wr;
        sample_axis(r, rows, r0, r1, wr);
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            Eigen::Index c0, c1;
            double wc;
            sample_axis(c, cols, c0, c1, wc);
            out(r, c) = (1 - wr) * ((1 - wc) * img(r0, c0) + wc * img(r0, c1)) +
                        wr * ((1 - wc) * img(r1, c0) + wc * img(r1, c1));
        }
    }
    return out;
}

CovarianceMatrix empirical_covariance(const FrameStack& stack, int size_cap) {
    if (stack.size() < 2) throw std::invalid_argument("empirical_covariance: need at least 2 frames");
    stack.validate();
    if (stack.rows() > size_cap || stack.cols() > size_cap) {
        throw std::length_error("empirical_covariance: frame exceeds the explicit size cap");
    }
    const double inv_t = 1.0 / static_cast<double>(stack.size());
    const Eigen::Index n = stack.frames.front().size();
    // Same accumulation order as temporal_variance so the diagonals agree exactly.
    Image mean = Image::Zero(stack.rows(), stack.cols());
    for (const auto& f : stack.frames) mean += f;
    mean *= inv_t;
    Eigen::MatrixXd centered(n, static_cast<Eigen::Index>(stack.size()));
    for (std::size_t k = 0; k < stack.size(); ++k) {
        const Image d = stack.frames[k] - mean;
        centered.col(static_cast<Eigen::Index>(k)) = as_vector(d);
    }
    CovarianceMatrix r;
    r.values.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < centered.cols(); ++k) {
                acc += centered(a, k) * centered(b, k);
            }
            r.values(a, b) = acc * inv_t;
            r.values(b, a) = r.values(a, b);
        }
        r.values(a, a) = std::max(r.values(a, a), 0.0);
    }
    return r;
}

namespace {

struct SparseColumn {
    std::vector<Eigen::Index> rows;
    std::vector<double> vals;
};

std::vector<SparseColumn> sparse_columns(const Eigen::MatrixXd& a) {
    std::vector<SparseColumn> cols(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index l = 0; l < a.cols(); ++l) {
        auto& c = cols[static_cast<std::size_t>(l)];
        for (Eigen::Index m = 0; m < a.rows(); ++m) {
            if (a(m, l) != 0.0) {
                c.rows.push_back(m);
                c.vals.push_back(a(m, l));
            }
        }
    }
    return cols;
}

double quad_form(const SparseColumn& c, const Eigen::MatrixXd& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < c.rows.size(); ++j) inner += r(c.rows[i], c.rows[j]) * c.vals[j];
        acc += c.vals[i] * inner;
    }
    return acc;
}

}  // namespace

Eigen::VectorXd compute_v_cov(const MeasurementOperator& a, const CovarianceMatrix& r_y) {
    const Eigen::MatrixXd& mat = a.matrix();
    if (r_y.values.rows() != mat.rows() || r_y.values.cols() != mat.rows()) {
        throw std::invalid_argument("compute_v_cov: covariance does not match the operator");
    }
    const auto cols = sparse_columns(mat);
    Eigen::VectorXd v(mat.cols());
    for (Eigen::Index l = 0; l < mat.cols(); ++l) {
        v(l) = quad_form(cols[static_cast<std::size_t>(l)], r_y.values);
    }
    return v;
}

Eigen::VectorXd compute_v_var(const MeasurementOperator& a_sq, const Image& g_y) {
    if (!a_sq.squared()) throw std::invalid_argument("compute_v_var: operator must be squared");
    const Image v = a_sq.adjoint(g_y);
    return as_vector(v);
}

Eigen::MatrixXd compute_M_matrix(const MeasurementOperator& a, Formulation formulation,
                                 int size_cap) {
    if (a.grid().low_side > size_cap) {
        throw std::length_error("compute_M_matrix: grid exceeds the explicit size cap");
    }
    const Eigen::MatrixXd& mat = a.matrix();
    if (formulation == Formulation::var) {
        if (!a.squared()) throw std::invalid_argument("compute_M_matrix: var needs the squared operator");
        return mat.transpose() * mat;
    }
    if (a.squared()) throw std::invalid_argument("compute_M_matrix: cov needs the unsquared operator");
    const Eigen::MatrixXd g = mat.transpose() * mat;
    return g.cwiseAbs2();
}

GramOperator gram_operator(const MeasurementOperator& a, Formulation formulation) {
    GramOperator out;
    out.dim = a.grid().high_pixels();
    if (formulation == Formulation::var) {
        if (!a.squared()) throw std::invalid_argument("gram_operator: var needs the squared operator");
        auto op = std::make_shared<MeasurementOperator>(a);
        out.apply = [op](const Eigen::VectorXd& x) { return op->adjoint(op->forward(x)); };
        return out;
    }
    if (a.squared()) throw std::invalid_argument("gram_operator: cov needs the unsquared operator");
    auto cols = std::make_shared<std::vector<SparseColumn>>(sparse_columns(a.matrix()));
    const Eigen::Index m2 = a.matrix().rows();
    out.apply = [cols, m2](const Eigen::VectorXd& x) {
        // Q = A diag(x) A^T, then (M x)_l = a_l^T Q a_l.
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m2, m2);
        for (std::size_t l = 0; l < cols->size(); ++l) {
            const double xl = x(static_cast<Eigen::Index>(l));
            if (xl == 0.0) continue;
            const auto& c = (*cols)[l];
            for (std::size_t i = 0; i < c.rows.size(); ++i) {
                const double s = xl * c.vals[i];
                for (std::size_t j = 0; j < c.rows.size(); ++j) q(c.rows[i], c.rows[j]) += s * c.vals[j];
            }
        }
        Eigen::VectorXd y(static_cast<Eigen::Index>(cols->size()));
        for (std::size_t l = 0; l < cols->size(); ++l) {
            y(static_cast<Eigen::Index>(l)) = quad_form((*cols)[l], q);
        }
        return y;
    };
    return out;
}

GramOperator gram_from_matrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("gram_from_matrix: matrix must be square");
    GramOperator out;
    out.dim = m.rows();
    auto mat = std::make_shared<Eigen::MatrixXd>(std::move(m));
    out.apply = [mat](const Eigen::VectorXd& x) -> Eigen::VectorXd { return (*mat) * x; };
    return out;
}

GramOperator gram_from_kernel(const Image& kernel, int side, bool use_fft) {
    if (kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0) {
        throw std::invalid_argument("gram_from_kernel: kernel must be square with odd side");
    }
    GramOperator out;
    out.dim = Eigen::Index{side} * side;
    if (use_fft) {
        auto conv = std::make_shared<FftConvolver>(side, side, kernel.rows());
        auto kf = std::make_shared<Spectrum>(conv->kernel_spectrum(kernel));
        out.apply = [conv, kf, side](const Eigen::VectorXd& x) {
            const Image y = conv->conv_same(conv->image_spectrum(as_image(x, side, side)), *kf);
            return Eigen::VectorXd(as_vector(y));
        };
    } else {
        out.apply = [kernel, side](const Eigen::VectorXd& x) {
            const Image y = conv2d_same(as_image(x, side, side), kernel);
            return Eigen::VectorXd(as_vector(y));
        };
    }
    return out;
}

LipschitzEstimate lipschitz_constant(const GramOperator& m, double rel_tol, int max_iters) {
    LipschitzEstimate est;
    if (m.dim == 0) {
        est.zero_operator = true;
        return est;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Ones(m.dim);
    // A deterministic ripple keeps the start vector off any eigenvector that
    // happens to be orthogonal to the constant vector.
    for (Eigen::Index i = 0; i < m.dim; ++i) x(i) += 1e-3 * std::sin(0.7 * static_cast<double>(i));
    x.normalize();
    double prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        const Eigen::VectorXd y = m(x);
        const double rayleigh = x.dot(y);
        const double norm = y.norm();
        est.iterations = it;
        if (!(norm > 0.0)) {
            est.value = 0.0;
            est.zero_operator = true;
            return est;
        }
        est.value = rayleigh;
        if (it > 1 && std::abs(rayleigh - prev) <= rel_tol * std::abs(rayleigh)) {
            est.converged = true;
            break;
        }
        prev = rayleigh;
        x = y / norm;
    }
    return est;
}

}  // namespace lsparcom
