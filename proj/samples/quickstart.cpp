// Learns H_2 on a spiked covariance with vanilla SGD and prints the overlap
// every 5000 steps next to the population recursion started from the same m0.

#include <cmath>
#include <cstdio>

#include "anisim/population.hpp"
#include "anisim/trainers.hpp"

int main() {
  using namespace anisim;
  const Eigen::Index d = 1000;
  const Eigen::VectorXd w_star = Eigen::VectorXd::Unit(d, 0);
  const SimInstance inst = make_instance(CovarianceSpec::spiked(d, 6.0, w_star), w_star, LinkFunction::hermite(2));

  TrainerConfig cfg;
  cfg.eta0 = 2e-5;
  cfg.steps = 40000;
  cfg.init_scale_cr = 0.05;
  cfg.record_every = 5000;
  cfg.seed = 3;
  const TrajectoryRecord rec = run_trajectory(inst, cfg);

  const double q0 = cfg.init_scale_cr * inst.q_sqrt_w_star_norm;
  const double et = eta_tilde_for(inst.link, cfg.eta0, inst.stats.lambda, q0);
  const auto pop = population_recursion(std::abs(rec.m0), et, inst.link.k_star(), cfg.steps, 1.0);

  std::printf("typical m0 %.4f, this seed %.4f, eta_tilde %.3g\n", inst.stats.typical_m0, rec.m0, et);
  std::printf("%8s %10s %10s %10s\n", "t", "|m_t|", "recursion", "||Q^.5 w||");
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    std::printf("%8lld %10.4f %10.4f %10.4f\n", static_cast<long long>(rec.times[i]), std::abs(rec.m_t[i]),
                pop.trajectory[static_cast<std::size_t>(rec.times[i])], rec.q_norm_w[i]);
  }
  if (rec.escape_time) std::printf("escaped (|m_t| >= 0.5) at t = %lld\n", static_cast<long long>(*rec.escape_time));
  return 0;
}
