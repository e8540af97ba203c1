#include "mrk/order_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <utility>

namespace mrk {

namespace {

using V = Eigen::VectorXd;

Residual eq(std::string condition, double lhs, double rhs) {
  return Residual{std::move(condition), lhs, rhs, std::abs(lhs - rhs)};
}

struct Member {
  const char* text;
  double value;
};

// lhs_1 = lhs_2 = ... = rhs, one residual per member.
ResidualList chain(std::initializer_list<Member> members, const char* rhs_text, double rhs) {
  ResidualList out;
  for (const Member& m : members) out.push_back(eq(std::string(m.text) + " = " + rhs_text, m.value, rhs));
  return out;
}

// The vectors and scalars the conditions are written in. bhat^T d is
// evaluated once and shared by every right-hand side.
struct Terms {
  explicit Terms(const ButcherTableau& t)
      : A(t.A()),
        Ah(t.Ahat()),
        b(t.b()),
        bh(t.bhat()),
        c(t.c()),
        d(t.d()),
        delta(t.delta()),
        one(V::Ones(t.stages())),
        d2(diamond_pow(d, 2)),
        d3(diamond_pow(d, 3)),
        Ahd(Ah * d),
        bhd(bh.dot(d)),
        bh_d_Ahd(bh.dot(diamond(d, Ahd))),
        quad(bhd * bhd - 2.0 * bhd + 0.5) {}

  const Eigen::MatrixXd& A;
  const Eigen::MatrixXd& Ah;
  const V& b;
  const V& bh;
  const V& c;
  const V& d;
  const V& delta;
  V one;
  V d2;
  V d3;
  V Ahd;
  double bhd;        // bhat^T d
  double bh_d_Ahd;   // bhat^T (d <> Ahat d)
  double quad;       // (bhat^T d)^2 - 2 bhat^T d + 1/2

  V dm(const V& u, const V& v) const { return diamond(u, v); }
  V dm(const V& u, const V& v, const V& w) const { return diamond(diamond(u, v), w); }
};

ConditionGroup group(std::string id, std::string description, ResidualList residuals) {
  return ConditionGroup{std::move(id), std::move(description), std::move(residuals)};
}

ResidualList flatten(const std::vector<ConditionGroup>& groups) {
  ResidualList out;
  for (const auto& g : groups) out.insert(out.end(), g.residuals.begin(), g.residuals.end());
  return out;
}

void require_drift_free(const ButcherTableau& t) {
  if (!t.drift_free()) {
    throw PreconditionError("Brownian-motion conditions require A = 0 (f-free tableau)");
  }
}

bool within(const ResidualList& residuals, double tol) { return max_abs_residual(residuals) <= tol; }

}  // namespace

double ConditionGroup::max_residual() const { return max_abs_residual(residuals); }

double max_abs_residual(const ResidualList& residuals) {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.abs_residual);
  return m;
}

ResidualList consistency_residuals(const ButcherTableau& t) {
  const Terms T(t);
  return {
      eq("bᵀ𝟙 = 1", T.b.sum(), 1.0),
      eq("d_s = 1", T.d(t.stages() - 1), 1.0),
      eq("b̂ᵀd = b̂ᵀ(δ◆d)", T.bhd, T.bh.dot(T.dm(T.delta, T.d))),
  };
}

std::vector<ConditionGroup> invmeas2_groups(const ButcherTableau& t) {
  const Terms T(t);
  const V dm1 = T.dm(T.delta - T.one, T.d);        // (delta - 1) <> d
  const V one_m_delta_d = T.dm(T.one - T.delta, T.d);  // (1 - delta) <> d
  const double K = 2.0 * T.bhd - 0.5;

  std::vector<ConditionGroup> g;
  g.push_back(group("invmeas2.1", "drift/noise balance",
                    {eq("b̂ᵀd = bᵀd", T.bhd, T.b.dot(T.d))}));
  g.push_back(group("invmeas2.2", "b-weighted second moments",
                    chain({{"bᵀc", T.b.dot(T.c)},
                           {"bᵀ(δ◆c)", T.b.dot(T.dm(T.delta, T.c))},
                           {"bᵀd^◆2", T.b.dot(T.d2)},
                           {"bᵀ(δ◆d^◆2)", T.b.dot(T.dm(T.delta, T.d2))}},
                          "2b̂ᵀd − 1/2", K)));
  g.push_back(group("invmeas2.3", "b̂-weighted moments",
                    chain({{"b̂ᵀc", T.bh.dot(T.c)},
                           {"b̂ᵀ(δ◆c)", T.bh.dot(T.dm(T.delta, T.c))},
                           {"b̂ᵀd^◆2", T.bh.dot(T.d2)},
                           {"b̂ᵀ(δ◆d^◆2)", T.bh.dot(T.dm(T.delta, T.d2))},
                           {"b̂ᵀd^◆3", T.bh.dot(T.d3)},
                           {"b̂ᵀ(δ◆d^◆3)", T.bh.dot(T.dm(T.delta, T.d3))}},
                          "2b̂ᵀd − 1/2", K)));
  g.push_back(group("invmeas2.4", "projected drift-noise coupling",
                    {eq("b̂ᵀ(c◆d) = b̂ᵀ(δ◆c◆d)", T.bh.dot(T.dm(T.c, T.d)),
                        T.bh.dot(T.dm(T.delta, T.c, T.d)))}));
  g.push_back(group("invmeas2.5", "unprojected stage noise",
                    {eq("bᵀ(d◆Â((𝟙−δ)◆d)) = 0", T.b.dot(T.dm(T.d, T.Ah * one_m_delta_d)), 0.0)}));
  const V A_dm1 = T.A * dm1;
  g.push_back(group("invmeas2.6", "drift of unprojected noise",
                    chain({{"b̂ᵀA((δ−𝟙)◆d)", T.bh.dot(A_dm1)},
                           {"b̂ᵀ(δ◆A((δ−𝟙)◆d))", T.bh.dot(T.dm(T.delta, A_dm1))}},
                          "(b̂ᵀd)² − 2b̂ᵀd + 1/2", T.quad)));
  g.push_back(group("invmeas2.7", "projection of drift and squared noise",
                    chain({{"b̂ᵀ(d◆Âc)", T.bh.dot(T.dm(T.d, T.Ah * T.c))},
                           {"b̂ᵀ(d◆Âd^◆2)", T.bh.dot(T.dm(T.d, T.Ah * T.d2))},
                           {"b̂ᵀ(d◆Â(δ◆d^◆2))", T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.delta, T.d2)))}},
                          "2b̂ᵀ(d◆Âd) + (b̂ᵀd)² − 2b̂ᵀd + 1/2", 2.0 * T.bh_d_Ahd + T.quad)));
  g.push_back(group("invmeas2.8", "cubic noise projection",
                    {eq("b̂ᵀ(d^◆2◆Âd) = b̂ᵀ(d◆Âd) + (1/2)(b̂ᵀd)²", T.bh.dot(T.dm(T.d2, T.Ahd)),
                        T.bh_d_Ahd + 0.5 * T.bhd * T.bhd)}));
  {
    const double lhs = T.bh.dot(T.dm(T.c, T.Ah * dm1)) +
                       T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.delta - 3.0 * T.one, T.d))) +
                       T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.delta, T.c)));
    g.push_back(group(
        "invmeas2.9", "combined drift/noise projection",
        {eq("b̂ᵀ(c◆Â((δ−𝟙)◆d)) + b̂ᵀ(d◆Â((δ−3·𝟙)◆d)) + b̂ᵀ(d◆Â(δ◆c)) = 2(b̂ᵀd)² − 4b̂ᵀd + 1", lhs,
            2.0 * T.bhd * T.bhd - 4.0 * T.bhd + 1.0)}));
  }
  {
    const V Ah_dd = T.Ah * T.dm(T.delta, T.d);
    const double lhs = T.bh.dot(T.dm(T.d2, Ah_dd)) + T.bh.dot(T.dm(T.d, Ah_dd));
    g.push_back(group("invmeas2.10", "projected noise, second kind",
                      {eq("b̂ᵀ(d^◆2◆Â(δ◆d)) + b̂ᵀ(d◆Â(δ◆d)) = 2b̂ᵀ(d◆Âd) + (3/2)(b̂ᵀd)² − 2b̂ᵀd + 1/2",
                          lhs, 2.0 * T.bh_d_Ahd + 1.5 * T.bhd * T.bhd - 2.0 * T.bhd + 0.5)}));
  }
  {
    const V u = T.Ah * one_m_delta_d;
    g.push_back(group("invmeas2.11", "squared unprojected noise",
                      {eq("b̂ᵀ(d◆(Â((𝟙−δ)◆d))^◆2) = 0", T.bh.dot(T.dm(T.d, diamond_pow(u, 2))), 0.0)}));
    const double lhs = T.bh.dot(T.dm(T.d, diamond_pow(T.Ahd, 2))) +
                       3.0 * T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.d, u)));
    g.push_back(group(
        "invmeas2.12", "quartic noise projection",
        {eq("b̂ᵀ(d◆(Âd)^◆2) + 3b̂ᵀ(d◆Â(d◆Â((𝟙−δ)◆d))) = (4 − 2b̂ᵀd)b̂ᵀ(d◆Âd) + 3(b̂ᵀd)² − 4b̂ᵀd + 1",
            lhs, (4.0 - 2.0 * T.bhd) * T.bh_d_Ahd + 3.0 * T.bhd * T.bhd - 4.0 * T.bhd + 1.0)}));
  }
  return g;
}

ResidualList invmeas2_residuals(const ButcherTableau& t) { return flatten(invmeas2_groups(t)); }

ResidualList invmeas2_residuals_delta_one(const ButcherTableau& t) {
  if (!t.delta().isOnes(0.0)) {
    throw PreconditionError("reduced invariant-measure conditions require δ = 𝟙");
  }
  const Terms T(t);
  const double K = 2.0 * T.bhd - 0.5;
  ResidualList out;
  out.push_back(eq("(b̂ᵀd)² − 2b̂ᵀd + 1/2 = 0", T.quad, 0.0));
  out.push_back(eq("b̂ᵀd = bᵀd", T.bhd, T.b.dot(T.d)));
  for (auto& r : chain({{"bᵀc", T.b.dot(T.c)},
                        {"bᵀd^◆2", T.b.dot(T.d2)},
                        {"b̂ᵀc", T.bh.dot(T.c)},
                        {"b̂ᵀd^◆2", T.bh.dot(T.d2)},
                        {"b̂ᵀd^◆3", T.bh.dot(T.d3)}},
                       "2b̂ᵀd − 1/2", K)) {
    out.push_back(std::move(r));
  }
  for (auto& r : chain({{"b̂ᵀ(d◆Âc)", T.bh.dot(T.dm(T.d, T.Ah * T.c))},
                        {"b̂ᵀ(d◆Âd^◆2)", T.bh.dot(T.dm(T.d, T.Ah * T.d2))}},
                       "2b̂ᵀ(d◆Âd)", 2.0 * T.bh_d_Ahd)) {
    out.push_back(std::move(r));
  }
  out.push_back(eq("b̂ᵀ(d^◆2◆Âd) = b̂ᵀ(d◆Âd) + b̂ᵀd − 1/4", T.bh.dot(T.dm(T.d2, T.Ahd)),
                   T.bh_d_Ahd + T.bhd - 0.25));
  out.push_back(eq("b̂ᵀ(d◆(Âd)^◆2) = (4 − 2b̂ᵀd)b̂ᵀ(d◆Âd) + 2b̂ᵀd − 1/2",
                   T.bh.dot(T.dm(T.d, diamond_pow(T.Ahd, 2))),
                   (4.0 - 2.0 * T.bhd) * T.bh_d_Ahd + 2.0 * T.bhd - 0.5));
  return out;
}

std::vector<ConditionGroup> weak2_groups(const ButcherTableau& t) {
  const Terms T(t);
  const V omd = T.dm(T.one - T.delta, T.d);
  const V A_omd = T.A * omd;
  const V Ah_omd = T.Ah * omd;
  const V Ah_dd = T.Ah * T.dm(T.delta, T.d);

  std::vector<ConditionGroup> g;
  g.push_back(group("weak2.1", "b-weighted moments",
                    chain({{"bᵀd", T.b.dot(T.d)},
                           {"bᵀc", T.b.dot(T.c)},
                           {"bᵀ(δ◆c)", T.b.dot(T.dm(T.delta, T.c))},
                           {"bᵀd^◆2", T.b.dot(T.d2)},
                           {"bᵀ(δ◆d^◆2)", T.b.dot(T.dm(T.delta, T.d2))}},
                          "1/2", 0.5)));
  g.push_back(group("weak2.2", "b̂-weighted moments",
                    chain({{"b̂ᵀd", T.bhd},
                           {"b̂ᵀc", T.bh.dot(T.c)},
                           {"b̂ᵀ(δ◆c)", T.bh.dot(T.dm(T.delta, T.c))},
                           {"b̂ᵀd^◆2", T.bh.dot(T.d2)},
                           {"b̂ᵀ(δ◆d^◆2)", T.bh.dot(T.dm(T.delta, T.d2))},
                           {"b̂ᵀd^◆3", T.bh.dot(T.d3)},
                           {"b̂ᵀ(δ◆d^◆3)", T.bh.dot(T.dm(T.delta, T.d3))}},
                          "1/2", 0.5)));
  g.push_back(group("weak2.3", "projected drift-noise coupling",
                    {eq("b̂ᵀ(c◆d) = b̂ᵀ(δ◆c◆d)", T.bh.dot(T.dm(T.c, T.d)),
                        T.bh.dot(T.dm(T.delta, T.c, T.d)))}));
  g.push_back(group("weak2.4", "noise projection", {eq("b̂ᵀ(d◆Âd) = 1/8", T.bh_d_Ahd, 0.125)}));
  g.push_back(group("weak2.5", "unprojected stage noise",
                    {eq("bᵀ(d◆Â((𝟙−δ)◆d)) = 0", T.b.dot(T.dm(T.d, Ah_omd)), 0.0)}));
  g.push_back(group("weak2.6", "drift of unprojected noise",
                    chain({{"b̂ᵀA((𝟙−δ)◆d)", T.bh.dot(A_omd)},
                           {"b̂ᵀ(δ◆A((𝟙−δ)◆d))", T.bh.dot(T.dm(T.delta, A_omd))}},
                          "1/4", 0.25)));
  g.push_back(group("weak2.7", "projection of drift and squared noise",
                    chain({{"b̂ᵀ(d◆Âc)", T.bh.dot(T.dm(T.d, T.Ah * T.c))},
                           {"b̂ᵀ(d◆Âd^◆2)", T.bh.dot(T.dm(T.d, T.Ah * T.d2))},
                           {"b̂ᵀ(d◆Â(δ◆d^◆2))", T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.delta, T.d2)))}},
                          "0", 0.0)));
  g.push_back(group("weak2.8", "cubic noise projection",
                    {eq("b̂ᵀ(d^◆2◆Âd) = 1/4", T.bh.dot(T.dm(T.d2, T.Ahd)), 0.25)}));
  {
    const double lhs = T.bh.dot(T.dm(T.c, Ah_omd)) - T.bh.dot(T.dm(T.d, Ah_dd)) -
                       T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.delta, T.c)));
    g.push_back(group("weak2.9", "combined drift/noise projection",
                      {eq("b̂ᵀ(c◆Â((𝟙−δ)◆d)) − b̂ᵀ(d◆Â(δ◆d)) − b̂ᵀ(d◆Â(δ◆c)) = 1/8", lhs, 0.125)}));
  }
  g.push_back(group("weak2.10", "projected noise, second kind",
                    {eq("b̂ᵀ(d^◆2◆Â(δ◆d)) + b̂ᵀ(d◆Â(δ◆d)) = 1/8",
                        T.bh.dot(T.dm(T.d2, Ah_dd)) + T.bh.dot(T.dm(T.d, Ah_dd)), 0.125)}));
  g.push_back(group("weak2.11", "squared unprojected noise",
                    {eq("b̂ᵀ(d◆(Â((𝟙−δ)◆d))^◆2) = 0", T.bh.dot(T.dm(T.d, diamond_pow(Ah_omd, 2))),
                        0.0)}));
  g.push_back(group("weak2.12", "quartic noise projection",
                    {eq("b̂ᵀ(d◆(Âd)^◆2) + 3b̂ᵀ(d◆Â(d◆Â((𝟙−δ)◆d))) = 1/8",
                        T.bh.dot(T.dm(T.d, diamond_pow(T.Ahd, 2))) +
                            3.0 * T.bh.dot(T.dm(T.d, T.Ah * T.dm(T.d, Ah_omd))),
                        0.125)}));
  return g;
}

ResidualList weak2_residuals(const ButcherTableau& t) { return flatten(weak2_groups(t)); }

ResidualList sphere_consistency_residuals(const ButcherTableau& t) {
  return {eq("bᵀ𝟙 = 1", t.b().sum(), 1.0), eq("d_s = 1", t.d()(t.stages() - 1), 1.0)};
}

ResidualList sphere_residuals(const ButcherTableau& t, SphereMode mode) {
  const Terms T(t);
  ResidualList out;
  const auto append = [&out](ResidualList more) {
    for (auto& r : more) out.push_back(std::move(r));
  };
  if (mode == SphereMode::weak2) {
    append(chain({{"bᵀd", T.b.dot(T.d)},
                  {"bᵀc", T.b.dot(T.c)},
                  {"bᵀ(δ◆c)", T.b.dot(T.dm(T.delta, T.c))},
                  {"bᵀd^◆2", T.b.dot(T.d2)},
                  {"bᵀ(δ◆d^◆2)", T.b.dot(T.dm(T.delta, T.d2))},
                  {"b̂ᵀd", T.bhd},
                  {"b̂ᵀc", T.bh.dot(T.c)}},
                 "1/2", 0.5));
    out.push_back(eq("b̂ᵀ(d◆Âd) = 1/8", T.bh_d_Ahd, 0.125));
    out.push_back(eq("b̂ᵀA((𝟙−δ)◆d) = 1/4", T.bh.dot(T.A * T.dm(T.one - T.delta, T.d)), 0.25));
    out.push_back(eq("b̂ᵀ(d◆Âc) = 0", T.bh.dot(T.dm(T.d, T.Ah * T.c)), 0.0));
    return out;
  }
  out.push_back(eq("b̂ᵀd = bᵀd", T.bhd, T.b.dot(T.d)));
  append(chain({{"bᵀc", T.b.dot(T.c)},
                {"bᵀ(δ◆c)", T.b.dot(T.dm(T.delta, T.c))},
                {"bᵀd^◆2", T.b.dot(T.d2)},
                {"bᵀ(δ◆d^◆2)", T.b.dot(T.dm(T.delta, T.d2))},
                {"b̂ᵀc", T.bh.dot(T.c)}},
               "2b̂ᵀd − 1/2", 2.0 * T.bhd - 0.5));
  out.push_back(eq("b̂ᵀ(d◆Âc) = 2b̂ᵀ(d◆Âd) + (b̂ᵀd)² − 2b̂ᵀd + 1/2",
                   T.bh.dot(T.dm(T.d, T.Ah * T.c)), 2.0 * T.bh_d_Ahd + T.quad));
  out.push_back(eq("b̂ᵀA((δ−𝟙)◆d) = (b̂ᵀd)² − 2b̂ᵀd + 1/2",
                   T.bh.dot(T.A * T.dm(T.delta - T.one, T.d)), T.quad));
  return out;
}

ResidualList bm_sphere_consistency_residuals(const ButcherTableau& t) {
  require_drift_free(t);
  return {eq("d_s = 1", t.d()(t.stages() - 1), 1.0)};
}

ResidualList bm_sphere_residuals(const ButcherTableau& t, SphereMode mode) {
  require_drift_free(t);
  if (mode == SphereMode::invmeas2) return {};
  const Terms T(t);
  return {eq("b̂ᵀd = 1/2", T.bhd, 0.5), eq("b̂ᵀ(d◆Âd) = 1/8", T.bh_d_Ahd, 0.125)};
}

ConditionReport classify(const ButcherTableau& t, double tol) {
  require_valid(t);
  ConditionReport report;
  report.scheme_name = t.name();
  report.tolerance = tol;

  const ResidualList consistency = consistency_residuals(t);
  report.groups.push_back(group("consistency", "consistency", consistency));

  const auto invmeas = invmeas2_groups(t);
  const auto weak = weak2_groups(t);
  report.groups.insert(report.groups.end(), invmeas.begin(), invmeas.end());
  report.groups.insert(report.groups.end(), weak.begin(), weak.end());
  if (t.delta().isOnes(0.0)) {
    report.groups.push_back(group("invmeas2_delta_one", "invariant measure order two, δ = 𝟙",
                                  invmeas2_residuals_delta_one(t)));
  }
  const ResidualList sph_cons = sphere_consistency_residuals(t);
  const ResidualList sph_inv = sphere_residuals(t, SphereMode::invmeas2);
  const ResidualList sph_weak = sphere_residuals(t, SphereMode::weak2);
  report.groups.push_back(group("sphere.consistency", "consistency on the unit sphere", sph_cons));
  report.groups.push_back(group("sphere.invmeas2", "invariant measure order two on the sphere", sph_inv));
  report.groups.push_back(group("sphere.weak2", "weak order two on the sphere", sph_weak));

  bool bm_weak2 = false;
  if (t.drift_free()) {
    const ResidualList bm_cons = bm_sphere_consistency_residuals(t);
    const ResidualList bm_weak = bm_sphere_residuals(t, SphereMode::weak2);
    report.groups.push_back(group("bm_sphere.consistency", "Brownian motion on the sphere: consistency", bm_cons));
    report.groups.push_back(group("bm_sphere.weak2", "Brownian motion on the sphere: weak order two", bm_weak));
    bm_weak2 = within(bm_cons, tol) && within(bm_weak, tol);
  }

  for (const auto& g : report.groups) report.max_residual_per_group[g.group_id] = g.max_residual();

  const bool consistent = within(consistency, tol);
  const auto all_within = [tol](const std::vector<ConditionGroup>& groups) {
    return std::all_of(groups.begin(), groups.end(),
                       [tol](const ConditionGroup& g) { return g.max_residual() <= tol; });
  };
  report.verdicts["consistent"] = consistent;
  report.verdicts["invmeas2"] = consistent && all_within(invmeas);
  report.verdicts["weak2"] = consistent && all_within(weak);
  report.verdicts["sphere_invmeas2"] = within(sph_cons, tol) && within(sph_inv, tol);
  report.verdicts["sphere_weak2"] = within(sph_cons, tol) && within(sph_weak, tol);
  report.verdicts["bm_sphere_weak2"] = bm_weak2;
  return report;
}

}  // namespace mrk
