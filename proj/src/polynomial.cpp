#include "curvelab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "curvelab/parallel.hpp"

namespace curvelab {

std::size_t MultiPoly::basis_size(int vars, int degree) {
    // C(degree + vars, vars)
    std::size_t num = 1, den = 1;
    for (int i = 1; i <= vars; ++i) {
        num *= degree + i;
        den *= i;
    }
    return num / den;
}

MultiPoly MultiPoly::zero(int vars, int degree) {
    MultiPoly p;
    p.vars = vars;
    p.degree = degree;
    for (int a = 0; a <= degree; ++a) {
        for (int b = 0; b <= (vars >= 2 ? degree - a : 0); ++b) {
            for (int c = 0; c <= (vars >= 3 ? degree - a - b : 0); ++c) {
                p.exponents.push_back({a, b, c});
                p.coeffs.push_back(0.0);
            }
        }
    }
    return p;
}

double MultiPoly::eval(const std::array<double, 3>& u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (coeffs[i] == 0.0) continue;
        double m = coeffs[i];
        for (int v = 0; v < vars; ++v)
            for (int e = 0; e < exponents[i][v]; ++e) m *= u[v];
        acc += m;
    }
    return acc;
}

std::array<double, 3> MultiPoly::gradient(const std::array<double, 3>& u) const {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (coeffs[i] == 0.0) continue;
        for (int v = 0; v < vars; ++v) {
            const int ev = exponents[i][v];
            if (ev == 0) continue;
            double m = coeffs[i] * ev;
            for (int w = 0; w < vars; ++w) {
                const int p = exponents[i][w] - (w == v ? 1 : 0);
                for (int e = 0; e < p; ++e) m *= u[w];
            }
            g[v] += m;
        }
    }
    return g;
}

double MultiPoly::coeff_norm() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return std::sqrt(s);
}

void MultiPoly::normalize() {
    const double n = coeff_norm();
    if (n > 0.0)
        for (double& c : coeffs) c /= n;
}

ProjectedPolySpace ProjectedPolySpace::full(int degree) {
    ProjectedPolySpace s;
    s.m = 3;
    s.basis = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    s.degree = degree;
    return s;
}

ProjectedPolySpace ProjectedPolySpace::line(Vec3 axis, int degree) {
    ProjectedPolySpace s;
    s.m = 1;
    s.basis = {axis.normalized(), Vec3{}, Vec3{}};
    s.degree = degree;
    return s;
}

ProjectedPolySpace ProjectedPolySpace::plane(Vec3 b1, Vec3 b2, int degree) {
    ProjectedPolySpace s;
    s.m = 2;
    Vec3 u1 = b1.normalized();
    Vec3 u2 = (b2 - u1 * u1.dot(b2)).normalized();
    s.basis = {u1, u2, Vec3{}};
    s.degree = degree;
    return s;
}

std::array<double, 3> ProjectedPolySpace::project(Vec3 z) const {
    std::array<double, 3> u{0.0, 0.0, 0.0};
    for (int i = 0; i < m; ++i) u[i] = basis[i].dot(z);
    return u;
}

Vec3 ProjectedPoly::gradient(Vec3 z) const {
    const auto g = poly.gradient(space.project(z));
    Vec3 out{};
    for (int i = 0; i < space.m; ++i) out = out + space.basis[i] * g[i];
    return out;
}

namespace {

MultiPoly poly_mul(const MultiPoly& a, const MultiPoly& b) {
    MultiPoly out = MultiPoly::zero(3, a.degree + b.degree);
    std::map<std::array<int, 3>, std::size_t> index;
    for (std::size_t i = 0; i < out.exponents.size(); ++i) index[out.exponents[i]] = i;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        if (a.coeffs[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) {
            if (b.coeffs[j] == 0.0) continue;
            std::array<int, 3> e{a.exponents[i][0] + b.exponents[j][0],
                                 a.exponents[i][1] + b.exponents[j][1],
                                 a.exponents[i][2] + b.exponents[j][2]};
            out.coeffs[index[e]] += a.coeffs[i] * b.coeffs[j];
        }
    }
    return out;
}

} // namespace

MultiPoly ProjectedPoly::expand() const {
    // substitute u_i = basis_i . z into the m-variate form
    MultiPoly out = MultiPoly::zero(3, poly.degree);
    std::map<std::array<int, 3>, std::size_t> index;
    for (std::size_t i = 0; i < out.exponents.size(); ++i) index[out.exponents[i]] = i;

    std::array<MultiPoly, 3> linear;
    for (int i = 0; i < space.m; ++i) {
        linear[i] = MultiPoly::zero(3, 1);
        for (std::size_t c = 0; c < linear[i].coeffs.size(); ++c) {
            const auto& e = linear[i].exponents[c];
            if (e[0] == 1) linear[i].coeffs[c] = space.basis[i].x;
            if (e[1] == 1) linear[i].coeffs[c] = space.basis[i].y;
            if (e[2] == 1) linear[i].coeffs[c] = space.basis[i].t;
        }
    }
    for (std::size_t i = 0; i < poly.coeffs.size(); ++i) {
        if (poly.coeffs[i] == 0.0) continue;
        MultiPoly term = MultiPoly::zero(3, 0);
        term.coeffs[0] = poly.coeffs[i];
        for (int v = 0; v < space.m; ++v)
            for (int e = 0; e < poly.exponents[i][v]; ++e) term = poly_mul(term, linear[v]);
        for (std::size_t c = 0; c < term.coeffs.size(); ++c)
            if (term.coeffs[c] != 0.0) out.coeffs[index[term.exponents[c]]] += term.coeffs[c];
    }
    return out;
}

MassPoints MassPoints::uniform_box(Vec3 lo, Vec3 hi, int per_side) {
    MassPoints m;
    const double w = 1.0 / (double(per_side) * per_side * per_side);
    for (int i = 0; i < per_side; ++i)
        for (int j = 0; j < per_side; ++j)
            for (int k = 0; k < per_side; ++k)
                m.push(Vec3{lo.x + (hi.x - lo.x) * (i + 0.5) / per_side,
                            lo.y + (hi.y - lo.y) * (j + 0.5) / per_side,
                            lo.t + (hi.t - lo.t) * (k + 0.5) / per_side},
                       w);
    return m;
}

// ---------------------------------------------------------------------------
// Equal split search
// ---------------------------------------------------------------------------
namespace {

struct SplitWork {
    // per mass: monomial values per point, weights
    std::vector<std::vector<std::vector<double>>> monomials;  // [mass][point][coeff]
    std::vector<std::vector<double>> weights;
    std::vector<double> totals;
    std::size_t dim = 0;

    double imbalance(const std::vector<double>& a, std::vector<double>* per_mass) const {
        double worst = 0.0;
        if (per_mass) per_mass->assign(monomials.size(), 0.0);
        for (std::size_t j = 0; j < monomials.size(); ++j) {
            double gj = 0.0;
            for (std::size_t i = 0; i < monomials[j].size(); ++i) {
                double v = 0.0;
                for (std::size_t c = 0; c < dim; ++c) v += a[c] * monomials[j][i][c];
                if (v > 0.0)
                    gj += weights[j][i];
                else if (v < 0.0)
                    gj -= weights[j][i];
            }
            const double rel = totals[j] > 0.0 ? std::abs(gj) / totals[j] : 0.0;
            if (per_mass) (*per_mass)[j] = rel;
            worst = std::max(worst, rel);
        }
        return worst;
    }

    double objective(const std::vector<double>& a) const {
        double s = 0.0;
        for (std::size_t j = 0; j < monomials.size(); ++j) {
            double gj = 0.0;
            for (std::size_t i = 0; i < monomials[j].size(); ++i) {
                double v = 0.0;
                for (std::size_t c = 0; c < dim; ++c) v += a[c] * monomials[j][i][c];
                gj += v > 0.0 ? weights[j][i] : (v < 0.0 ? -weights[j][i] : 0.0);
            }
            const double rel = totals[j] > 0.0 ? gj / totals[j] : 0.0;
            s += rel * rel;
        }
        return s;
    }
};

// Exact minimization along a coefficient-space direction: the sign pattern
// only changes at the flip parameters tau_i = -p_i / v_i, so a sorted sweep
// with incremental updates finds the global 1D optimum.
double line_search(const SplitWork& work, std::vector<double>& a,
                   const std::vector<double>& dir) {
    struct Flip {
        double tau;
        std::size_t mass;
        double delta;  // change of G_j when crossing upward
    };
    std::vector<Flip> flips;
    std::vector<double> g(work.monomials.size(), 0.0);
    // values and slopes
    for (std::size_t j = 0; j < work.monomials.size(); ++j) {
        for (std::size_t i = 0; i < work.monomials[j].size(); ++i) {
            double p = 0.0, v = 0.0;
            for (std::size_t k = 0; k < work.dim; ++k) {
                p += a[k] * work.monomials[j][i][k];
                v += dir[k] * work.monomials[j][i][k];
            }
            const double w = work.weights[j][i];
            if (v == 0.0) {
                g[j] += p > 0.0 ? w : (p < 0.0 ? -w : 0.0);
            } else {
                // sign(p + tau v) = sign(v) * sign(tau - tau_i)
                const double tau_i = -p / v;
                flips.push_back({tau_i, j, 2.0 * (v > 0.0 ? w : -w)});
                g[j] += v > 0.0 ? -w : w;  // state at tau = -inf
            }
        }
    }
    std::sort(flips.begin(), flips.end(), [](const Flip& x, const Flip& y) { return x.tau < y.tau; });

    auto score = [&](const std::vector<double>& gj) {
        double s = 0.0;
        for (std::size_t j = 0; j < gj.size(); ++j) {
            const double rel = work.totals[j] > 0.0 ? gj[j] / work.totals[j] : 0.0;
            s += rel * rel;
        }
        return s;
    };

    double best_tau = 0.0;
    double best = work.objective(a);  // tau = 0 is always admissible
    std::size_t i = 0;
    while (i < flips.size()) {
        std::size_t k = i;
        while (k < flips.size() && flips[k].tau <= flips[i].tau + 1e-15) {
            g[flips[k].mass] += flips[k].delta;
            ++k;
        }
        // evaluate in the open interval after this flip cluster
        const double hi = k < flips.size() ? flips[k].tau : flips[i].tau + 1.0;
        const double tau = 0.5 * (flips[i].tau + hi);
        const double s = score(g);
        if (s < best - 1e-15) {
            best = s;
            best_tau = tau;
        }
        i = k;
    }
    if (best_tau != 0.0) {
        for (std::size_t k = 0; k < work.dim; ++k) a[k] += best_tau * dir[k];
        double n = 0.0;
        for (double x : a) n += x * x;
        n = std::sqrt(n);
        for (double& x : a) x /= n;
    }
    return best;
}

} // namespace

EqualSplitResult equal_split_polynomial(const std::vector<MassPoints>& masses,
                                        const ProjectedPolySpace& space,
                                        const EqualSplitOptions& opts) {
    const std::size_t dim = space.dimension();
    if (masses.size() + 1 > dim)
        throw std::invalid_argument("equal_split_polynomial: need #masses <= dim(space) - 1");

    MultiPoly proto = MultiPoly::zero(space.m, space.degree);
    SplitWork work;
    work.dim = dim;
    work.monomials.resize(masses.size());
    work.weights.resize(masses.size());
    work.totals.resize(masses.size());
    for (std::size_t j = 0; j < masses.size(); ++j) {
        work.totals[j] = masses[j].total;
        work.weights[j] = masses[j].weights;
        work.monomials[j].resize(masses[j].points.size());
        for (std::size_t i = 0; i < masses[j].points.size(); ++i) {
            const auto u = space.project(masses[j].points[i]);
            auto& row = work.monomials[j][i];
            row.resize(dim);
            for (std::size_t cidx = 0; cidx < dim; ++cidx) {
                double m = 1.0;
                for (int v = 0; v < space.m; ++v)
                    for (int e = 0; e < proto.exponents[cidx][v]; ++e) m *= u[v];
                row[cidx] = m;
            }
        }
    }

    // normalize monomial columns to unit RMS over the cloud; the search runs
    // in the scaled basis, which keeps Newton and the sweeps well conditioned
    std::vector<double> col_scale(dim, 0.0);
    std::size_t npts = 0;
    for (std::size_t j = 0; j < masses.size(); ++j) {
        npts += masses[j].points.size();
        for (const auto& row : work.monomials[j])
            for (std::size_t c = 0; c < dim; ++c) col_scale[c] += row[c] * row[c];
    }
    for (std::size_t c = 0; c < dim; ++c)
        col_scale[c] = std::max(std::sqrt(col_scale[c] / std::max<std::size_t>(npts, 1)), 1e-12);
    for (auto& mset : work.monomials)
        for (auto& row : mset)
            for (std::size_t c = 0; c < dim; ++c) row[c] /= col_scale[c];

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> best_a;
    double best_obj = std::numeric_limits<double>::infinity();

    // Interpolation seed: a polynomial vanishing at the weighted centroid of
    // every mass. Its zero set reaches each cell, which gives the smoothed
    // Newton stage gradient traction everywhere (dim >= N + 1 guarantees a
    // nonzero null vector).
    {
        const std::size_t nm = masses.size();
        std::vector<double> M(nm * dim, 0.0);
        for (std::size_t j = 0; j < nm; ++j) {
            for (std::size_t i = 0; i < work.monomials[j].size(); ++i)
                for (std::size_t c = 0; c < dim; ++c)
                    M[j * dim + c] += work.weights[j][i] * work.monomials[j][i][c];
            for (std::size_t c = 0; c < dim; ++c) M[j * dim + c] /= work.totals[j];
        }
        // row-reduce; pivots mark bound columns
        std::vector<int> pivot_col(nm, -1);
        std::size_t row = 0;
        for (std::size_t col = 0; col < dim && row < nm; ++col) {
            std::size_t piv = row;
            for (std::size_t r = row + 1; r < nm; ++r)
                if (std::abs(M[r * dim + col]) > std::abs(M[piv * dim + col])) piv = r;
            if (std::abs(M[piv * dim + col]) < 1e-12) continue;
            if (piv != row)
                for (std::size_t c = 0; c < dim; ++c) std::swap(M[row * dim + c], M[piv * dim + c]);
            const double p = M[row * dim + col];
            for (std::size_t c = 0; c < dim; ++c) M[row * dim + c] /= p;
            for (std::size_t r = 0; r < nm; ++r) {
                if (r == row) continue;
                const double f = M[r * dim + col];
                if (f == 0.0) continue;
                for (std::size_t c = 0; c < dim; ++c) M[r * dim + c] -= f * M[row * dim + c];
            }
            pivot_col[row++] = static_cast<int>(col);
        }
        // free column with the largest index not used as a pivot
        std::vector<bool> bound(dim, false);
        for (std::size_t r = 0; r < row; ++r)
            if (pivot_col[r] >= 0) bound[pivot_col[r]] = true;
        int free_col = -1;
        for (std::size_t c = 0; c < dim; ++c)
            if (!bound[c]) free_col = static_cast<int>(c);
        if (free_col >= 0) {
            std::vector<double> a(dim, 0.0);
            a[free_col] = 1.0;
            for (std::size_t r = 0; r < row; ++r)
                if (pivot_col[r] >= 0) a[pivot_col[r]] = -M[r * dim + free_col];
            double n = 0.0;
            for (double x : a) n += x * x;
            n = std::sqrt(n);
            if (n > 1e-12) {
                for (double& x : a) x /= n;
                best_a = a;
                best_obj = work.objective(a);
            }
        }
    }

    for (int r = 0; r < opts.restarts; ++r) {
        std::vector<double> a(dim);
        double n = 0.0;
        for (double& x : a) {
            x = gauss(rng);
            n += x * x;
        }
        n = std::sqrt(n);
        for (double& x : a) x /= n;
        const double obj = work.objective(a);
        if (obj < best_obj) {
            best_obj = obj;
            best_a = a;
        }
    }
    if (best_a.empty()) {
        best_a.assign(dim, 0.0);
        best_a[0] = 1.0;
    }

    auto within_target = [&](const std::vector<double>& per_mass) {
        for (std::size_t j = 0; j < per_mass.size(); ++j) {
            const double abs_res = per_mass[j] * work.totals[j];
            if (per_mass[j] > opts.tol &&
                (opts.tol_absolute <= 0.0 || abs_res > opts.tol_absolute))
                return false;
        }
        return true;
    };

    // Annealed Gauss-Newton on the tanh-smoothed sign balance: solve
    // G_j(a) = sum_i w tanh(P_i / eps) = 0 with a least-norm step, shrinking
    // eps; the combinatorial sweeps below then polish the exact objective.
    {
        const std::size_t nm = masses.size();
        std::vector<double> gvec(nm), jt(nm * dim);
        auto rms_p = [&] {
            double s = 0.0;
            std::size_t n = 0;
            for (std::size_t j = 0; j < nm; ++j)
                for (const auto& row : work.monomials[j]) {
                    double p = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) p += best_a[c] * row[c];
                    s += p * p;
                    ++n;
                }
            return std::sqrt(s / std::max<std::size_t>(n, 1));
        };
        auto sum_g2 = [&](const std::vector<double>& a, double eps_) {
            double s = 0.0;
            for (std::size_t j = 0; j < nm; ++j) {
                double gj = 0.0;
                for (std::size_t i = 0; i < work.monomials[j].size(); ++i) {
                    const auto& row = work.monomials[j][i];
                    double p = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) p += a[c] * row[c];
                    gj += work.weights[j][i] * std::tanh(p / eps_);
                }
                gj /= work.totals[j];
                s += gj * gj;
            }
            return s;
        };
        double eps = 0.5 * rms_p();
        for (int outer = 0; outer < 40 && eps > 1e-9; ++outer, eps *= 0.7) {
            for (int inner = 0; inner < 4; ++inner) {
                std::fill(gvec.begin(), gvec.end(), 0.0);
                std::fill(jt.begin(), jt.end(), 0.0);
                for (std::size_t j = 0; j < nm; ++j) {
                    const double wt = 1.0 / work.totals[j];
                    for (std::size_t i = 0; i < work.monomials[j].size(); ++i) {
                        const auto& row = work.monomials[j][i];
                        double p = 0.0;
                        for (std::size_t c = 0; c < dim; ++c) p += best_a[c] * row[c];
                        const double th = std::tanh(p / eps);
                        const double w = work.weights[j][i] * wt;
                        gvec[j] += w * th;
                        const double dsech = w * (1.0 - th * th) / eps;
                        for (std::size_t c = 0; c < dim; ++c) jt[j * dim + c] += dsech * row[c];
                    }
                }
                // JJ^T lambda = G, step = -J^T lambda (least-norm)
                std::vector<double> jjt(nm * nm, 0.0);
                for (std::size_t r = 0; r < nm; ++r)
                    for (std::size_t s2 = r; s2 < nm; ++s2) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < dim; ++c)
                            acc += jt[r * dim + c] * jt[s2 * dim + c];
                        jjt[r * nm + s2] = jjt[s2 * nm + r] = acc;
                    }
                for (std::size_t r = 0; r < nm; ++r) jjt[r * nm + r] *= 1.0 + 1e-10;
                // Gaussian elimination with partial pivoting
                std::vector<double> rhs = gvec;
                bool singular = false;
                for (std::size_t col = 0; col < nm && !singular; ++col) {
                    std::size_t piv = col;
                    for (std::size_t r = col + 1; r < nm; ++r)
                        if (std::abs(jjt[r * nm + col]) > std::abs(jjt[piv * nm + col])) piv = r;
                    if (std::abs(jjt[piv * nm + col]) < 1e-300) {
                        singular = true;
                        break;
                    }
                    if (piv != col) {
                        for (std::size_t c = 0; c < nm; ++c)
                            std::swap(jjt[col * nm + c], jjt[piv * nm + c]);
                        std::swap(rhs[col], rhs[piv]);
                    }
                    for (std::size_t r = col + 1; r < nm; ++r) {
                        const double f = jjt[r * nm + col] / jjt[col * nm + col];
                        for (std::size_t c = col; c < nm; ++c) jjt[r * nm + c] -= f * jjt[col * nm + c];
                        rhs[r] -= f * rhs[col];
                    }
                }
                if (singular) break;
                std::vector<double> lambda(nm, 0.0);
                for (std::size_t r = nm; r-- > 0;) {
                    double acc = rhs[r];
                    for (std::size_t c = r + 1; c < nm; ++c) acc -= jjt[r * nm + c] * lambda[c];
                    lambda[r] = acc / jjt[r * nm + r];
                }
                std::vector<double> step(dim, 0.0);
                double step2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    double d = 0.0;
                    for (std::size_t j = 0; j < nm; ++j) d += jt[j * dim + c] * lambda[j];
                    step[c] = d;
                    step2 += d * d;
                }
                // backtracking on the smoothed residual
                const double base = sum_g2(best_a, eps);
                double damp = 1.0;
                std::vector<double> trial(dim);
                bool accepted = false;
                for (int bt = 0; bt < 8; ++bt, damp *= 0.5) {
                    double n = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        trial[c] = best_a[c] - damp * step[c];
                        n += trial[c] * trial[c];
                    }
                    n = std::sqrt(n);
                    if (n < 1e-12) continue;
                    for (double& x : trial) x /= n;
                    if (sum_g2(trial, eps) < base) {
                        best_a = trial;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted || step2 < 1e-24) break;
            }
        }
    }

    EqualSplitResult res;
    int sweeps = 0;
    std::vector<double> per_mass;
    std::vector<double> dir(dim, 0.0);
    std::vector<double> snapshot = best_a;
    double snapshot_score = work.imbalance(best_a, nullptr);
    for (; sweeps < opts.max_sweeps; ++sweeps) {
        const double score = work.imbalance(best_a, &per_mass);
        if (score < snapshot_score) {
            snapshot_score = score;
            snapshot = best_a;
        }
        if (within_target(per_mass)) break;
        const double before = work.objective(best_a);
        for (std::size_t c = 0; c < dim; ++c) {
            std::fill(dir.begin(), dir.end(), 0.0);
            dir[c] = 1.0;
            line_search(work, best_a, dir);
        }
        // a few random directions break coordinate-axis stalls
        for (int r = 0; r < 4; ++r) {
            double n = 0.0;
            for (double& x : dir) {
                x = gauss(rng);
                n += x * x;
            }
            n = std::sqrt(n);
            for (double& x : dir) x /= n;
            line_search(work, best_a, dir);
        }
        const double after = work.objective(best_a);
        if (after >= before - 1e-15) {
            // stuck in a sign-pattern plateau; kick and continue
            for (double& x : best_a) x += 0.2 * gauss(rng);
            double n = 0.0;
            for (double x : best_a) n += x * x;
            n = std::sqrt(n);
            for (double& x : best_a) x /= n;
        }
    }

    if (work.imbalance(best_a, nullptr) > snapshot_score) best_a = snapshot;

    res.sweeps_used = sweeps;
    work.imbalance(best_a, &res.residuals);
    res.converged = within_target(res.residuals);
    ProjectedPoly poly;
    poly.space = space;
    poly.poly = proto;
    poly.poly.coeffs.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) poly.poly.coeffs[c] = best_a[c] / col_scale[c];
    poly.poly.normalize();
    res.poly = poly;
    return res;
}

// ---------------------------------------------------------------------------
// Sign-cell decomposition
// ---------------------------------------------------------------------------

int SignCellDecomposition::product_degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.degree();
    return d;
}

std::vector<int> SignCellDecomposition::sign_vector(Vec3 z) const {
    std::vector<int> s(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) s[i] = factors[i].eval(z) > 0.0 ? 1 : -1;
    return s;
}

double SignCellDecomposition::product_eval(Vec3 z) const {
    double p = 1.0;
    for (const auto& f : factors) p *= f.eval(z);
    return p;
}

double SignCellDecomposition::wall_distance_proxy(Vec3 z) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : factors) {
        const double g = std::max(f.gradient(z).norm(), 1e-9);
        best = std::min(best, std::abs(f.eval(z)) / g);
    }
    return best;
}

std::map<std::vector<int>, double> SignCellDecomposition::cell_masses(
    const MassPoints& mass) const {
    std::map<std::vector<int>, double> cells;
    for (std::size_t i = 0; i < mass.points.size(); ++i)
        cells[sign_vector(mass.points[i])] += mass.weights[i];
    return cells;
}

SignCellDecomposition build_partition(const MassPoints& mass, const ProjectedPolySpace& space,
                                      int D, double wall_width, const EqualSplitOptions& opts) {
    if (D < 2) throw std::invalid_argument("build_partition: D must be >= 2");
    SignCellDecomposition out;
    out.space = space;
    out.wall_width = wall_width;
    const int s = static_cast<int>(std::floor(space.m * std::log2(double(D))));
    out.rounds = s;

    // cell id per point; split every nonempty cell simultaneously each round
    std::vector<std::size_t> cell_of(mass.points.size(), 0);
    std::size_t ncells = 1;
    EqualSplitOptions o = opts;
    if (o.tol_absolute <= 0.0) o.tol_absolute = o.tol * mass.total;
    for (int round = 0; round < s; ++round) {
        std::vector<MassPoints> sub(ncells);
        for (std::size_t i = 0; i < mass.points.size(); ++i)
            sub[cell_of[i]].push(mass.points[i], mass.weights[i]);
        std::vector<MassPoints> nonempty;
        std::vector<std::size_t> owner;
        for (std::size_t c = 0; c < ncells; ++c)
            if (!sub[c].points.empty()) {
                nonempty.push_back(std::move(sub[c]));
                owner.push_back(c);
            }
        // smallest degree whose space can split all current cells, with
        // slack so the solution manifold has positive dimension
        ProjectedPolySpace round_space = space;
        const std::size_t want = 2 * nonempty.size() + 1;
        int d = 1;
        while (MultiPoly::basis_size(space.m, d) < want) ++d;
        round_space.degree = d;
        o.seed = split_seed(opts.seed, round);
        EqualSplitResult split = equal_split_polynomial(nonempty, round_space, o);
        out.per_round_residuals.push_back(
            *std::max_element(split.residuals.begin(), split.residuals.end()));
        out.converged = out.converged && split.converged;
        out.factors.push_back(split.poly);
        for (std::size_t i = 0; i < mass.points.size(); ++i) {
            const bool pos = split.poly.eval(mass.points[i]) > 0.0;
            cell_of[i] = 2 * cell_of[i] + (pos ? 1 : 0);
        }
        ncells *= 2;
    }
    return out;
}

Variety Variety::plane(Vec3 normal, double offset) {
    Variety v;
    ProjectedPoly p;
    p.space = ProjectedPolySpace::line(normal, 1);
    p.poly = MultiPoly::zero(1, 1);
    // u - offset along the unit normal
    for (std::size_t i = 0; i < p.poly.exponents.size(); ++i) {
        if (p.poly.exponents[i][0] == 1) p.poly.coeffs[i] = 1.0;
        if (p.poly.exponents[i][0] == 0) p.poly.coeffs[i] = -offset;
    }
    v.defining.push_back(p);
    return v;
}

Variety Variety::line_x_axis_free(Vec3 n1, double c1, Vec3 n2, double c2) {
    Variety v = plane(n1, c1);
    Variety w = plane(n2, c2);
    v.defining.push_back(w.defining[0]);
    return v;
}

TciReport tci_check(const Variety& variety, Vec3 box_lo, Vec3 box_hi, int sample_budget) {
    TciReport rep;
    const int nd = static_cast<int>(variety.defining.size());
    if (nd < 1 || nd > 2) throw std::invalid_argument("tci_check: need 1 or 2 defining polynomials");

    auto wedge_norm = [&](Vec3 z) {
        if (nd == 1) return variety.defining[0].gradient(z).norm();
        return variety.defining[0].gradient(z).cross(variety.defining[1].gradient(z)).norm();
    };

    // gradient scale over the box (coarse sweep)
    const int gs = 8;
    for (int i = 0; i <= gs; ++i)
        for (int j = 0; j <= gs; ++j)
            for (int k = 0; k <= gs; ++k) {
                Vec3 z{box_lo.x + (box_hi.x - box_lo.x) * i / gs,
                       box_lo.y + (box_hi.y - box_lo.y) * j / gs,
                       box_lo.t + (box_hi.t - box_lo.t) * k / gs};
                double prod = 1.0;
                for (const auto& p : variety.defining) prod *= p.gradient(z).norm();
                rep.gradient_scale = std::max(rep.gradient_scale, prod);
            }

    // locate zero-set points: sign changes along grid edges, bisection on the
    // first polynomial, then Gauss-Newton onto the full system
    const int n = 12;
    rep.min_wedge_norm = std::numeric_limits<double>::infinity();
    auto refine = [&](Vec3 z) {
        for (int it = 0; it < 40; ++it) {
            double maxres = 0.0;
            for (const auto& p : variety.defining) maxres = std::max(maxres, std::abs(p.eval(z)));
            if (maxres < 1e-11) break;
            // Gauss-Newton step for the (under-determined) system
            if (nd == 1) {
                const double f = variety.defining[0].eval(z);
                const Vec3 g = variety.defining[0].gradient(z);
                const double g2 = std::max(g.norm2(), 1e-18);
                z = z - g * (f / g2);
            } else {
                const double f1 = variety.defining[0].eval(z);
                const double f2 = variety.defining[1].eval(z);
                const Vec3 g1 = variety.defining[0].gradient(z);
                const Vec3 g2 = variety.defining[1].gradient(z);
                // solve J J^T lambda = f, step = J^T lambda
                const double a11 = g1.dot(g1), a12 = g1.dot(g2), a22 = g2.dot(g2);
                const double det = a11 * a22 - a12 * a12;
                if (std::abs(det) < 1e-18) break;
                const double l1 = (a22 * f1 - a12 * f2) / det;
                const double l2 = (a11 * f2 - a12 * f1) / det;
                z = z - (g1 * l1 + g2 * l2);
            }
        }
        return z;
    };

    int found = 0;
    const Vec3 step{(box_hi.x - box_lo.x) / n, (box_hi.y - box_lo.y) / n,
                    (box_hi.t - box_lo.t) / n};
    const std::array<Vec3, 3> axes{Vec3{step.x, 0, 0}, Vec3{0, step.y, 0}, Vec3{0, 0, step.t}};
    for (int axis = 0; axis < 3 && found < sample_budget; ++axis) {
        for (int i = 0; i <= n && found < sample_budget; ++i) {
            for (int j = 0; j <= n && found < sample_budget; ++j) {
                for (int k = 0; k < n && found < sample_budget; ++k) {
                    // edge along `axis`; (i, j) index the transverse plane
                    Vec3 z0;
                    if (axis == 0)
                        z0 = Vec3{box_lo.x + step.x * k, box_lo.y + step.y * i,
                                  box_lo.t + step.t * j};
                    else if (axis == 1)
                        z0 = Vec3{box_lo.x + step.x * i, box_lo.y + step.y * k,
                                  box_lo.t + step.t * j};
                    else
                        z0 = Vec3{box_lo.x + step.x * i, box_lo.y + step.y * j,
                                  box_lo.t + step.t * k};
                    Vec3 z1 = z0 + axes[axis];
                    double f0 = variety.defining[0].eval(z0),
                           f1 = variety.defining[0].eval(z1);
                    Vec3 lo = z0, hi = z1;
                    if (f0 == 0.0) {
                        hi = z0;
                    } else if (f0 * f1 < 0.0) {
                        for (int it = 0; it < 60; ++it) {
                            Vec3 mid = (lo + hi) * 0.5;
                            const double fm = variety.defining[0].eval(mid);
                            if (fm == 0.0) {
                                lo = hi = mid;
                                break;
                            }
                            (f0 * fm < 0.0 ? hi : lo) = mid;
                        }
                    } else {
                        continue;
                    }
                    Vec3 z = refine((lo + hi) * 0.5);
                    double maxres = 0.0;
                    for (const auto& p : variety.defining)
                        maxres = std::max(maxres, std::abs(p.eval(z)));
                    if (maxres > 1e-8 * std::max(1.0, rep.gradient_scale)) continue;
                    rep.min_wedge_norm = std::min(rep.min_wedge_norm, wedge_norm(z));
                    ++found;
                }
            }
        }
    }
    rep.points_checked = found;
    rep.zero_set_found = found > 0;
    if (!rep.zero_set_found) {
        rep.min_wedge_norm = 0.0;
        rep.pass = true;  // vacuous, flagged via zero_set_found
        return rep;
    }
    rep.pass = rep.min_wedge_norm >= 1e-6 * std::max(rep.gradient_scale, 1e-30);
    return rep;
}

IncidenceReport cell_tube_incidence(const SignCellDecomposition& decomp,
                                    const std::vector<CoreLine>& tubes, int samples_per_tube) {
    IncidenceReport rep;
    const int degree = decomp.product_degree();
    rep.degree_bound = degree + 1;
    if (samples_per_tube <= 0) samples_per_tube = 4 * degree + 8;
    for (const CoreLine& line : tubes) {
        std::vector<std::vector<int>> seen;
        for (int s = 0; s < samples_per_tube; ++s) {
            const double t = line.t_max * (s + 0.5) / samples_per_tube;
            const Vec3 z = line.at(t);
            if (decomp.wall_width > 0.0 && decomp.in_wall(z)) continue;
            auto sv = decomp.sign_vector(z);
            if (std::find(seen.begin(), seen.end(), sv) == seen.end()) seen.push_back(sv);
        }
        rep.max_cells_per_tube = std::max(rep.max_cells_per_tube, static_cast<int>(seen.size()));
    }
    rep.pass = rep.max_cells_per_tube <= rep.degree_bound;
    return rep;
}

std::string polynomial_to_json(const ProjectedPoly& p) {
    const MultiPoly e = p.expand();
    std::ostringstream os;
    os << "[";
    bool first = true;
    for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
        if (std::abs(e.coeffs[i]) < 1e-15) continue;
        if (!first) os << ",";
        first = false;
        os << "{\"exponents\":[" << e.exponents[i][0] << "," << e.exponents[i][1] << ","
           << e.exponents[i][2] << "],\"coeff\":" << e.coeffs[i] << "}";
    }
    os << "]";
    return os.str();
}

std::string decomposition_to_json(const SignCellDecomposition& d, const MassPoints& mass) {
    std::ostringstream os;
    os << "{\"schema_version\":1,\"wall_width\":" << d.wall_width << ",\"factors\":[";
    for (std::size_t i = 0; i < d.factors.size(); ++i) {
        if (i) os << ",";
        os << polynomial_to_json(d.factors[i]);
    }
    os << "],\"sign_cells\":[";
    bool first = true;
    for (const auto& [sv, m] : d.cell_masses(mass)) {
        if (!first) os << ",";
        first = false;
        os << "{\"signs\":[";
        for (std::size_t i = 0; i < sv.size(); ++i) os << (i ? "," : "") << sv[i];
        os << "],\"mass\":" << m << "}";
    }
    os << "]}";
    return os.str();
}

} // namespace curvelab
