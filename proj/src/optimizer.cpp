#include <mtps/errors.hpp>
#include <mtps/optimizer.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace mtps {

    namespace {

        struct Point {
            double a = 0.0;
            double f = 0.0;
            double d = 0.0; // directional derivative
            Vec x;
            Vec g;
            bool ok = false;
        };

        bool finite(double f, const Vec& g) { return std::isfinite(f) && g.allFinite(); }

        // Minimizer of the cubic interpolating (a, f, d) at both ends, or NaN.
        double cubic_min(const Point& p, const Point& q)
        {
            const double d1 = p.d + q.d - 3.0 * (p.f - q.f) / (p.a - q.a);
            const double disc = d1 * d1 - p.d * q.d;
            if (disc < 0.0)
                return std::numeric_limits<double>::quiet_NaN();
            const double d2 = std::copysign(std::sqrt(disc), q.a - p.a);
            return q.a - (q.a - p.a) * (q.d + d2 - d1) / (q.d - p.d + 2.0 * d2);
        }

        class LineSearch {
        public:
            LineSearch(const Objective& f, const Vec& x, const Vec& p, double f0, double d0, const MinimizeOptions& opts, int& evals)
                : _f(f), _x(x), _p(p), _f0(f0), _d0(d0), _opts(opts), _evals(evals)
            {
            }

            // Returns a point with a > 0 satisfying sufficient decrease, or a point with ok == false.
            Point run(double alpha)
            {
                Point prev;
                prev.a = 0.0;
                prev.f = _f0;
                prev.d = _d0;
                prev.ok = true;
                for (int i = 0; i < _opts.max_line_search_evals; ++i) {
                    Point cur = eval(alpha);
                    if (!cur.ok || cur.f > _f0 + _opts.c1 * alpha * _d0 || (i > 0 && cur.f >= prev.f))
                        return zoom(prev, cur);
                    if (std::abs(cur.d) <= -_opts.c2 * _d0)
                        return cur;
                    if (cur.d >= 0.0)
                        return zoom(cur, prev);
                    prev = cur;
                    alpha *= 2.0;
                }
                return prev.a > 0.0 ? prev : Point{};
            }

        private:
            Point eval(double a)
            {
                Point pt;
                pt.a = a;
                pt.x = _x + a * _p;
                pt.g = Vec::Zero(_x.size());
                ++_evals;
                pt.f = _f(pt.x, pt.g);
                pt.ok = finite(pt.f, pt.g);
                pt.d = pt.ok ? pt.g.dot(_p) : 0.0;
                return pt;
            }

            Point zoom(Point lo, Point hi)
            {
                for (int i = 0; i < _opts.max_line_search_evals; ++i) {
                    const double left = std::min(lo.a, hi.a);
                    const double width = std::abs(hi.a - lo.a);
                    if (width <= 1e-16 * std::max(1.0, lo.a))
                        break;
                    double a = hi.ok ? cubic_min(lo, hi) : std::numeric_limits<double>::quiet_NaN();
                    if (!std::isfinite(a) || a < left + 0.1 * width || a > left + 0.9 * width)
                        a = 0.5 * (lo.a + hi.a);
                    Point cur = eval(a);
                    if (!cur.ok || cur.f > _f0 + _opts.c1 * a * _d0 || cur.f >= lo.f) {
                        hi = cur;
                        continue;
                    }
                    if (std::abs(cur.d) <= -_opts.c2 * _d0)
                        return cur;
                    if (cur.d * (hi.a - lo.a) >= 0.0)
                        hi = lo;
                    lo = cur;
                }
                return lo.a > 0.0 ? lo : Point{};
            }

            const Objective& _f;
            const Vec& _x;
            const Vec& _p;
            double _f0;
            double _d0;
            const MinimizeOptions& _opts;
            int& _evals;
        };

        // Inverse-Hessian approximation: dense BFGS or limited-memory two-loop recursion.
        class InverseHessian {
        public:
            InverseHessian(Eigen::Index n, bool limited, int memory) : _n(n), _limited(limited), _memory(memory) { reset(); }

            void reset()
            {
                _updated = false;
                _gamma = 1.0;
                _s.clear();
                _y.clear();
                if (!_limited)
                    _h = Mat::Identity(_n, _n);
            }

            bool fresh() const { return !_updated; }

            Vec direction(const Vec& g) const
            {
                if (!_limited)
                    return -(_h * g);
                Vec q = g;
                std::vector<double> alpha(_s.size());
                for (std::size_t k = _s.size(); k-- > 0;) {
                    alpha[k] = _s[k].dot(q) / _s[k].dot(_y[k]);
                    q -= alpha[k] * _y[k];
                }
                Vec r = _gamma * q;
                for (std::size_t k = 0; k < _s.size(); ++k) {
                    const double beta = _y[k].dot(r) / _s[k].dot(_y[k]);
                    r += (alpha[k] - beta) * _s[k];
                }
                return -r;
            }

            void update(const Vec& s, const Vec& y)
            {
                const double sy = s.dot(y);
                if (!(sy > 1e-12 * s.norm() * y.norm()))
                    return;
                if (_limited) {
                    _s.push_back(s);
                    _y.push_back(y);
                    if (static_cast<int>(_s.size()) > _memory) {
                        _s.pop_front();
                        _y.pop_front();
                    }
                    _gamma = sy / y.dot(y);
                }
                else {
                    if (!_updated)
                        _h *= sy / y.dot(y);
                    const double rho = 1.0 / sy;
                    const Vec hy = _h * y;
                    const double yhy = y.dot(hy);
                    _h += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
                }
                _updated = true;
            }

        private:
            Eigen::Index _n;
            bool _limited;
            int _memory;
            bool _updated = false;
            double _gamma = 1.0;
            Mat _h;
            std::deque<Vec> _s;
            std::deque<Vec> _y;
        };

        std::string describe(const Vec& x)
        {
            std::ostringstream os;
            os.precision(17);
            const Eigen::Index shown = std::min<Eigen::Index>(x.size(), 8);
            for (Eigen::Index i = 0; i < shown; ++i)
                os << (i ? ", " : "") << x(i);
            if (shown < x.size())
                os << ", ...";
            return os.str();
        }

    } // namespace

    MinimizeResult minimize(const Objective& f, const Vec& x0, const MinimizeOptions& opts)
    {
        MinimizeResult res;
        res.x = x0;
        res.grad = Vec::Zero(x0.size());
        res.evals = 1;
        res.f = f(res.x, res.grad);
        if (!finite(res.f, res.grad))
            throw OptimizerError("minimize: non-finite objective at initial point [" + describe(x0) + "]");

        res.trace.push_back({0, res.f, res.grad.norm(), res.evals});
        InverseHessian h(x0.size(), x0.size() > opts.lbfgs_threshold, opts.memory);

        for (int it = 1; it <= opts.max_iters; ++it) {
            const double gnorm = res.grad.norm();
            const double tol = opts.grad_tol < 0.0 ? 1e-5 * std::max(1.0, std::abs(res.f)) : opts.grad_tol;
            if (gnorm <= tol) {
                res.converged = true;
                break;
            }

            Point next;
            for (int attempt = 0; attempt < 2; ++attempt) {
                Vec p = h.direction(res.grad);
                double d0 = p.dot(res.grad);
                if (!(d0 < 0.0)) {
                    h.reset();
                    p = -res.grad;
                    d0 = -gnorm * gnorm;
                }
                const double alpha = h.fresh() ? std::min(1.0, 1.0 / p.norm()) : 1.0;
                LineSearch ls(f, res.x, p, res.f, d0, opts, res.evals);
                next = ls.run(alpha);
                if (next.ok || h.fresh())
                    break;
                h.reset();
            }
            if (!next.ok) {
                res.warning = true;
                res.message = "line search failed at iteration " + std::to_string(it) + "; returning best point";
                break;
            }

            h.update(next.x - res.x, next.g - res.grad);
            res.x = std::move(next.x);
            res.f = next.f;
            res.grad = std::move(next.g);
            res.trace.push_back({it, res.f, res.grad.norm(), res.evals});
        }
        if (!res.converged && !res.warning) {
            const double tol = opts.grad_tol < 0.0 ? 1e-5 * std::max(1.0, std::abs(res.f)) : opts.grad_tol;
            res.converged = res.grad.norm() <= tol;
            if (!res.converged)
                res.message = "iteration cap reached";
        }
        return res;
    }

    std::string trace_csv(const std::vector<TraceEntry>& trace)
    {
        std::ostringstream os;
        os.precision(17);
        os << "iteration,f,grad_norm,evals\n";
        for (const auto& t : trace)
            os << t.iteration << ',' << t.f << ',' << t.grad_norm << ',' << t.evals << '\n';
        return os.str();
    }

} // namespace mtps
