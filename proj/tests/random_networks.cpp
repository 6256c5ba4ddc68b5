#include "random_networks.hpp"

#include "dcshare/losses.hpp"

namespace dcshare::testing {

PwlCurve NetworkGen::curve(int pieces, double v_open) {
  PwlCurve c;
  double beta = -uniform(0.05, 0.8);
  double gamma = v_open;
  double knee = 0.0;
  for (int j = 0; j < pieces; ++j) {
    c.pieces.push_back({beta, gamma});
    // Next piece is steeper and takes over at a knee further out, which keeps
    // every piece on the envelope.
    const double step = uniform(1.0, 4.0);
    knee += step;
    const double beta_next = beta - uniform(0.1, 0.7);
    gamma = gamma + (beta - beta_next) * knee;
    beta = beta_next;
  }
  return c;
}

Branch NetworkGen::branch(const std::string& name, int pieces, double v_open, bool with_mu) {
  Branch b;
  b.name = name;
  b.source = curve(pieces, v_open);
  b.rs_ohm = uniform(0.1, 0.6);
  b.rl_ohm = uniform(0.01, 0.08);
  b.rm_ohm = uniform(0.008, 0.03);
  b.rd_ohm = uniform(0.008, 0.03);
  b.vd_volt = uniform(0.3, 0.8);
  // Gate margin 2 needs R >= |R_M - R_D|; the cable floor keeps it safe.
  b.r_cable_ohm = uniform(0.08, 0.5);
  b.alpha = uniform(0.001, 0.005);
  b.lambda = uniform(0.5, 2.0);
  b.mu = with_mu ? uniform(0.2, 1.5) : 0.0;
  b.i_min_amp = uniform(0.0, 0.4);
  return b;
}

NetworkSpec NetworkGen::network(int n_branches, int max_pieces, bool with_mu) {
  NetworkSpec net;
  net.fs_hz = 100e3;
  double v_open_max = 0.0;
  for (int k = 0; k < n_branches; ++k) {
    const double v_open = uniform(42.0, 58.0);
    v_open_max = std::max(v_open_max, v_open);
    net.branches.push_back(
        branch("b" + std::to_string(k + 1), uniform_int(1, max_pieces), v_open, with_mu));
  }
  net.v_load_min = v_open_max * uniform(1.03, 1.18);
  net.v_load_max = net.v_load_min + uniform(3.0, 8.0);
  // Per-branch demand of a few amps keeps the program strictly feasible.
  net.r_load_ohm = net.v_load_min / (n_branches * uniform(3.0, 6.0));
  for (auto& b : net.branches) b.g_max = max_gain_bound(b, net.r_load_ohm);
  return net;
}

NetworkSpec NetworkGen::converter_network(int n_branches) {
  NetworkSpec net = network(n_branches, 4, true);
  for (auto& b : net.branches) {
    b.rs_ohm = uniform(0.04, 0.18);
    b.rl_ohm = uniform(0.01, 0.04);
    b.r_cable_ohm = uniform(0.06, 0.25);
    b.mu = uniform(0.6, 2.0);
    b.g_max = max_gain_bound(b, net.r_load_ohm);
  }
  return net;
}

}  // namespace dcshare::testing
