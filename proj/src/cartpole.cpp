#include <mtps/cartpole.hpp>
#include <mtps/errors.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mtps {

    void CartPoleParams::validate() const
    {
        if (!(cart_mass > 0 && pole_mass > 0 && pole_length > 0 && friction >= 0 && gravity > 0 && dt > 0 && substeps >= 1 && u_max > 0))
            throw InvalidInput("cart-pole: physical parameters must be positive");
        if (process_noise_sd.size() != cartpole::state_dim || (process_noise_sd.array() < 0.0).any())
            throw InvalidInput("cart-pole: process noise needs four nonnegative entries");
    }

    namespace cartpole {

        Vec dynamics(const CartPoleParams& p, const Vec& x, double u)
        {
            const double m = p.pole_mass;
            const double mc = p.cart_mass;
            const double l = p.pole_length;
            const double g = p.gravity;
            const double b = p.friction;
            const double s = std::sin(x(phi));
            const double c = std::cos(x(phi));
            const double w = x(phi_dot);
            const double v = x(chi_dot);

            Vec dx(state_dim);
            dx(chi) = v;
            dx(chi_dot) = (2 * m * l * w * w * s + 3 * m * g * s * c + 4 * u - 4 * b * v) / (4 * (mc + m) - 3 * m * c * c);
            dx(phi) = w;
            dx(phi_dot) = (-3 * m * l * w * w * s * c - 6 * (mc + m) * g * s - 6 * (u - b * v) * c) / (4 * l * (m + mc) - 3 * m * l * c * c);
            return dx;
        }

        Vec step(const CartPoleParams& p, const Vec& x, double u, std::mt19937_64* rng, bool* clamped)
        {
            if (x.size() != state_dim)
                throw InvalidInput("cart-pole step: state must have four components");
            const double uc = std::clamp(u, -p.u_max, p.u_max);
            if (clamped)
                *clamped = (uc != u);
            const double h = p.dt / p.substeps;
            Vec s = x;
            for (int i = 0; i < p.substeps; ++i) {
                const Vec k1 = dynamics(p, s, uc);
                const Vec k2 = dynamics(p, s + 0.5 * h * k1, uc);
                const Vec k3 = dynamics(p, s + 0.5 * h * k2, uc);
                const Vec k4 = dynamics(p, s + h * k3, uc);
                s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            if (rng) {
                std::normal_distribution<double> n(0.0, 1.0);
                for (int i = 0; i < state_dim; ++i)
                    s(i) += p.process_noise_sd(i) * n(*rng);
            }
            return s;
        }

        Vec sample_initial(std::mt19937_64& rng)
        {
            std::normal_distribution<double> n(0.0, 0.1);
            Vec x(state_dim);
            for (int i = 0; i < state_dim; ++i)
                x(i) = n(rng);
            return x;
        }

        GaussianDist initial_distribution() { return GaussianDist(Vec::Zero(state_dim), 0.01 * Mat::Identity(state_dim, state_dim)); }

        double energy(const CartPoleParams& p, const Vec& x)
        {
            const double m = p.pole_mass;
            const double l = p.pole_length;
            const double v = x(chi_dot);
            const double w = x(phi_dot);
            const double c = std::cos(x(phi));
            // Uniform rod of length l: center of mass at l/2, inertia m l^2 / 12 about it.
            return 0.5 * (p.cart_mass + m) * v * v + 0.5 * m * l * c * v * w + m * l * l * w * w / 6.0 - 0.5 * m * p.gravity * l * c;
        }

        SaturatingCost cost(const CartPoleParams& p, double eta, double width)
        {
            const double l = p.pole_length;
            SaturatingCost c;
            c.angles = {phi};
            // Columns: chi, chi_dot, phi, phi_dot, sin phi, cos phi
            c.feature_map = Mat::Zero(2, 6);
            c.feature_map(0, chi) = 1.0;
            c.feature_map(0, 4) = l;
            c.feature_map(1, 5) = l;
            c.offset = Vec(2);
            c.offset << -eta, l;
            c.q = Mat::Identity(2, 2) / (width * width);
            return c;
        }

        FeatureMap model_features(bool with_position)
        {
            FeatureMap f;
            if (with_position)
                f.plain = {chi, chi_dot, phi_dot, state_dim};
            else
                f.plain = {chi_dot, phi_dot, state_dim};
            f.angles = {phi};
            return f;
        }

        FeatureMap policy_features(bool with_position) { return model_features(with_position); }

        std::string trajectory_csv(const std::vector<TrajectoryRow>& rows)
        {
            std::ostringstream os;
            os.precision(17);
            os << "t,chi,chi_dot,phi,phi_dot,u\n";
            for (const auto& r : rows)
                os << r.t << ',' << r.x(0) << ',' << r.x(1) << ',' << r.x(2) << ',' << r.x(3) << ',' << r.u << '\n';
            return os.str();
        }

    } // namespace cartpole

} // namespace mtps
