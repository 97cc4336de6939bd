#ifndef MTPS_CARTPOLE_HPP
#define MTPS_CARTPOLE_HPP

#include <random>
#include <string>
#include <vector>

#include <mtps/cost.hpp>
#include <mtps/features.hpp>
#include <mtps/gaussian.hpp>

namespace mtps {

    /// Cart-pole with cart friction. State [chi, chi_dot, phi, phi_dot]; phi = 0 hangs down, phi = pi is upright.
    struct CartPoleParams {
        double cart_mass = 0.5;
        double pole_mass = 0.5;
        double pole_length = 0.6;
        double friction = 0.1;
        double gravity = 9.82;
        double dt = 0.1;
        int substeps = 10;
        double u_max = 10.0;
        Vec process_noise_sd = Vec::Constant(4, 0.01);

        void validate() const;
    };

    namespace cartpole {

        constexpr int chi = 0;
        constexpr int chi_dot = 1;
        constexpr int phi = 2;
        constexpr int phi_dot = 3;
        constexpr int state_dim = 4;

        /// Time derivative of the state under force u.
        Vec dynamics(const CartPoleParams& p, const Vec& x, double u);

        /// One control interval: RK4 with p.substeps substeps, then additive Gaussian noise (if rng is given).
        /// Forces beyond u_max are clamped; `clamped` reports whether that happened.
        Vec step(const CartPoleParams& p, const Vec& x, double u, std::mt19937_64* rng, bool* clamped = nullptr);

        /// Draw from N(0, 0.1^2 I).
        Vec sample_initial(std::mt19937_64& rng);
        GaussianDist initial_distribution();

        /// Mechanical energy (kinetic + potential, zero at the pivot height).
        double energy(const CartPoleParams& p, const Vec& x);

        /// c = 1 - exp(-d^T Q d / 2), d = (chi - eta + l sin phi, l + l cos phi), Q = (1 / width^2) I.
        SaturatingCost cost(const CartPoleParams& p, double eta, double width = 0.25);

        /// Model input map over raw [x; u]: plain (chi_dot, phi_dot, u) and (sin, cos) of phi;
        /// chi is included only when `with_position` is set.
        FeatureMap model_features(bool with_position);

        /// Policy input map over raw [x; eta - chi]: plain (chi_dot, phi_dot, eta - chi) and (sin, cos) of phi;
        /// chi is included only when `with_position` is set.
        FeatureMap policy_features(bool with_position);

        struct TrajectoryRow {
            double t;
            Vec x;
            double u;
        };

        /// CSV with header t,chi,chi_dot,phi,phi_dot,u.
        std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

    } // namespace cartpole

} // namespace mtps

#endif
