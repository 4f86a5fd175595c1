#include "ddpglab/harness.hpp"

#include <ostream>

namespace ddpglab {

CriticSnapshot export_critic_snapshot(const AgentState& agent, const ProbeGrid& grid,
                                      std::int64_t step) {
  CriticSnapshot snap;
  snap.step = step;
  snap.grid = grid;
  const Eigen::RowVectorXd states = grid.states();
  const Eigen::MatrixXd pi = evaluate(agent.actor, states);
  snap.pi.assign(pi.data(), pi.data() + pi.size());
  Eigen::MatrixXd input(2, static_cast<Eigen::Index>(grid.n_states) * grid.n_actions);
  for (int i = 0; i < grid.n_states; ++i) {
    for (int j = 0; j < grid.n_actions; ++j) {
      input(0, i * grid.n_actions + j) = states[i];
      input(1, i * grid.n_actions + j) = grid.action(j);
    }
  }
  const Eigen::MatrixXd q = evaluate(agent.critic, input);
  snap.q.assign(q.data(), q.data() + q.size());
  return snap;
}

CriticSnapshot export_snapshot(const std::function<double(double, double)>& q,
                               const std::function<double(double)>& pi, const ProbeGrid& grid,
                               std::int64_t step) {
  CriticSnapshot snap;
  snap.step = step;
  snap.grid = grid;
  for (int i = 0; i < grid.n_states; ++i) {
    const double s = grid.state(i);
    snap.pi.push_back(pi(s));
    for (int j = 0; j < grid.n_actions; ++j) snap.q.push_back(q(s, grid.action(j)));
  }
  return snap;
}

void write_snapshot_csv_header(std::ostream& out) { out << "step,s,a,q,pi_of_s\n"; }

void write_snapshot_csv_rows(std::ostream& out, const CriticSnapshot& snapshot) {
  const auto precision = out.precision(17);
  for (int i = 0; i < snapshot.grid.n_states; ++i) {
    for (int j = 0; j < snapshot.grid.n_actions; ++j) {
      out << snapshot.step << ',' << snapshot.grid.state(i) << ',' << snapshot.grid.action(j) << ','
          << snapshot.q_at(i, j) << ',' << snapshot.pi[static_cast<std::size_t>(i)] << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace ddpglab
