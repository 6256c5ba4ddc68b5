#include "dcshare/relaxation.hpp"

#include <cmath>

#include "dcshare/errors.hpp"
#include "dcshare/losses.hpp"

namespace dcshare {

int VariableMap::size() const {
  int n = 5 * n_branches;
  for (int idx : aux)
    if (idx >= 0) ++n;
  return n;
}

RelaxedProgram build_program(const NetworkSpec& net, const SolveRequest& req) {
  require_valid(net);
  require_convex(net);
  if (!(req.v_load >= net.v_load_min && req.v_load <= net.v_load_max))
    throw ValidationError("BadSetpoint", "v_load must lie inside the network voltage window");

  const int n = static_cast<int>(net.branches.size());
  RelaxedProgram out;
  out.v_load = req.v_load;
  out.vars.n_branches = n;
  out.vars.aux.assign(n, -1);
  int next = 5 * n;
  for (int k = 0; k < n; ++k)
    if (req.include_circulating && net.branches[k].mu > 0.0) out.vars.aux[k] = next++;

  auto& prog = out.program;
  const auto& vm = out.vars;
  prog.n_vars = next;
  prog.p0 = Eigen::MatrixXd::Zero(next, next);
  prog.q0 = Eigen::VectorXd::Zero(next);
  prog.var_names.assign(next, "");
  for (int k = 0; k < n; ++k) {
    const auto& name = net.branches[k].name;
    prog.var_names[vm.vs(k)] = "vs[" + name + "]";
    prog.var_names[vm.v_in(k)] = "v_in[" + name + "]";
    prog.var_names[vm.v_out(k)] = "v_out[" + name + "]";
    prog.var_names[vm.is(k)] = "is[" + name + "]";
    prog.var_names[vm.i(k)] = "i[" + name + "]";
    if (vm.aux[k] >= 0) prog.var_names[vm.aux[k]] = "t[" + name + "]";
  }

  auto zero = [&] { return Eigen::VectorXd::Zero(next).eval(); };

  // Objective: per-branch weighted loss. With v_load fixed the switching term
  // alpha v_load is is linear, so the loss quadratic involves only (is, i).
  for (int k = 0; k < n; ++k) {
    const auto& b = net.branches[k];
    const auto r = effective_resistances(b);
    const double cross = b.alpha * b.r_cable_ohm - (b.rm_ohm - b.rd_ohm);
    prog.p0(vm.is(k), vm.is(k)) += b.lambda * r.r1;
    prog.p0(vm.i(k), vm.i(k)) += b.lambda * b.r_cable_ohm;
    prog.p0(vm.is(k), vm.i(k)) += b.lambda * cross / 2.0;
    prog.p0(vm.i(k), vm.is(k)) += b.lambda * cross / 2.0;
    prog.q0[vm.is(k)] += b.lambda * b.alpha * (req.v_load + b.vd_volt);
    prog.q0[vm.i(k)] += b.lambda * b.vd_volt;
    if (vm.aux[k] >= 0) prog.q0[vm.aux[k]] += b.mu;
  }

  // Equalities: input KVL, output KVL per branch, then the load KCL row.
  for (int k = 0; k < n; ++k) {
    const auto& b = net.branches[k];
    LinearConstraint in;
    in.a = zero();
    in.a[vm.v_in(k)] = 1.0;
    in.a[vm.vs(k)] = -1.0;
    in.a[vm.is(k)] = b.rs_ohm;
    in.rhs = 0.0;
    in.kind = ConstraintKind::KvlInput;
    in.label = b.name;
    prog.equalities.push_back(std::move(in));

    LinearConstraint outr;
    outr.a = zero();
    outr.a[vm.v_out(k)] = 1.0;
    outr.a[vm.i(k)] = -b.r_cable_ohm;
    outr.rhs = req.v_load;
    outr.kind = ConstraintKind::KvlOutput;
    outr.label = b.name;
    prog.equalities.push_back(std::move(outr));
  }
  {
    LinearConstraint kcl;
    kcl.a = zero();
    for (int k = 0; k < n; ++k) kcl.a[vm.i(k)] = 1.0;
    kcl.rhs = req.v_load / net.r_load_ohm;
    kcl.kind = ConstraintKind::Kcl;
    kcl.label = "load";
    prog.equalities.push_back(std::move(kcl));
  }

  // Linear inequalities per branch: gain box, source-curve cuts, bounds.
  for (int k = 0; k < n; ++k) {
    const auto& b = net.branches[k];

    LinearConstraint floor;
    floor.a = zero();
    floor.a[vm.v_in(k)] = 1.0;
    floor.a[vm.v_out(k)] = -1.0;
    floor.rhs = 0.0;
    floor.kind = ConstraintKind::GainFloor;
    floor.label = b.name;
    prog.inequalities.push_back(std::move(floor));

    LinearConstraint ceil;
    ceil.a = zero();
    ceil.a[vm.v_out(k)] = 1.0;
    ceil.a[vm.v_in(k)] = -b.g_max;
    ceil.rhs = 0.0;
    ceil.kind = ConstraintKind::GainCeiling;
    ceil.label = b.name;
    prog.inequalities.push_back(std::move(ceil));

    for (std::size_t j = 0; j < b.source.pieces.size(); ++j) {
      LinearConstraint cut;
      cut.a = zero();
      cut.a[vm.vs(k)] = 1.0;
      cut.a[vm.is(k)] = -b.source.pieces[j].beta;
      cut.rhs = b.source.pieces[j].gamma;
      cut.kind = ConstraintKind::SourceCurve;
      cut.label = b.name + "#" + std::to_string(j);
      prog.inequalities.push_back(std::move(cut));
    }

    for (int v : {vm.vs(k), vm.v_in(k), vm.v_out(k), vm.is(k)}) {
      LinearConstraint nn;
      nn.a = zero();
      nn.a[v] = -1.0;
      nn.rhs = 0.0;
      nn.kind = ConstraintKind::Nonnegative;
      nn.label = prog.var_names[v];
      prog.inequalities.push_back(std::move(nn));
    }

    const double i_floor = std::max(0.0, resolved_i_min(b, req.v_load, net.fs_hz));
    out.i_min.push_back(i_floor);
    LinearConstraint cf;
    cf.a = zero();
    cf.a[vm.i(k)] = -1.0;
    cf.rhs = -i_floor;
    cf.kind = ConstraintKind::CurrentFloor;
    cf.label = b.name;
    prog.inequalities.push_back(std::move(cf));

    if (req.include_input_floor) {
      LinearConstraint vf;
      vf.a = zero();
      vf.a[vm.v_in(k)] = -1.0;
      vf.rhs = -20.0 * b.vd_volt;
      vf.kind = ConstraintKind::InputFloor;
      vf.label = b.name;
      prog.inequalities.push_back(std::move(vf));
    }
  }

  // Circulating-current epigraphs: |sum_j (v_out_k - v_out_j)/(R_k+R_j)| <= t_k.
  for (int k = 0; k < n; ++k) {
    if (vm.aux[k] < 0) continue;
    Eigen::VectorXd ic = zero();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const double w =
          1.0 / (net.branches[k].r_cable_ohm + net.branches[j].r_cable_ohm);
      ic[vm.v_out(k)] += w;
      ic[vm.v_out(j)] -= w;
    }
    for (double sign : {1.0, -1.0}) {
      LinearConstraint c;
      c.a = sign * ic;
      c.a[vm.aux[k]] = -1.0;
      c.rhs = 0.0;
      c.kind = ConstraintKind::CirculatingAbs;
      c.label = net.branches[k].name + (sign > 0 ? "+" : "-");
      prog.inequalities.push_back(std::move(c));
    }
  }

  // Power-balance quadratics, one per source-curve piece:
  //   Q(is, i) + v_load i - beta_j is^2 - gamma_j is <= 0.
  for (int k = 0; k < n; ++k) {
    const auto& b = net.branches[k];
    const auto r = effective_resistances(b);
    const double cross = b.alpha * b.r_cable_ohm - (b.rm_ohm - b.rd_ohm);
    for (std::size_t j = 0; j < b.source.pieces.size(); ++j) {
      QuadConstraint qc;
      qc.p = Eigen::MatrixXd::Zero(next, next);
      qc.q = zero();
      qc.r = 0.0;
      qc.p(vm.is(k), vm.is(k)) = r.r1 - b.source.pieces[j].beta;
      qc.p(vm.i(k), vm.i(k)) = b.r_cable_ohm;
      qc.p(vm.is(k), vm.i(k)) = cross / 2.0;
      qc.p(vm.i(k), vm.is(k)) = cross / 2.0;
      qc.q[vm.is(k)] = b.alpha * (req.v_load + b.vd_volt) - b.source.pieces[j].gamma;
      qc.q[vm.i(k)] = b.vd_volt + req.v_load;
      qc.kind = ConstraintKind::PowerBalance;
      qc.label = b.name + "#" + std::to_string(j);
      prog.quadratics.push_back(std::move(qc));
    }
  }

  prog.check_well_formed();
  return out;
}

OperatingPoint unpack_point(const VariableMap& vars, const Eigen::VectorXd& x, double v_load) {
  if (x.size() != vars.size())
    throw ValidationError("SizeMismatch", "point dimension does not match the variable map");
  OperatingPoint pt;
  pt.v_load = v_load;
  for (int k = 0; k < vars.n_branches; ++k) {
    pt.vs.push_back(x[vars.vs(k)]);
    pt.v_in.push_back(x[vars.v_in(k)]);
    pt.v_out.push_back(x[vars.v_out(k)]);
    pt.is.push_back(x[vars.is(k)]);
    pt.i.push_back(x[vars.i(k)]);
  }
  return pt;
}

Eigen::VectorXd pack_point(const NetworkSpec& net, const VariableMap& vars,
                           const OperatingPoint& pt) {
  if (static_cast<int>(pt.is.size()) != vars.n_branches)
    throw ValidationError("SizeMismatch", "operating point does not match the variable map");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(vars.size());
  for (int k = 0; k < vars.n_branches; ++k) {
    x[vars.vs(k)] = pt.vs[k];
    x[vars.v_in(k)] = pt.v_in[k];
    x[vars.v_out(k)] = pt.v_out[k];
    x[vars.is(k)] = pt.is[k];
    x[vars.i(k)] = pt.i[k];
  }
  std::vector<double> r_cable;
  for (const auto& b : net.branches) r_cable.push_back(b.r_cable_ohm);
  const auto ic = circulating_currents(pt.v_out, r_cable);
  for (int k = 0; k < vars.n_branches; ++k)
    if (vars.aux[k] >= 0) x[vars.aux[k]] = std::abs(ic[k]);
  return x;
}

}  // namespace dcshare
