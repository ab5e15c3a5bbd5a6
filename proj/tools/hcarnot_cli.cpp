// Command-line front end: deterministic runs of the library's calibrations,
// capacity/modulus solvers, map reports, and the value-distribution
// constructions, with versioned JSON output and CSV curve emission.

#include "hcarnot/algebra.hpp"
#include "hcarnot/capacity.hpp"
#include "hcarnot/curves.hpp"
#include "hcarnot/kaplan.hpp"
#include "hcarnot/maps.hpp"
#include "hcarnot/quadrature.hpp"
#include "hcarnot/value_distribution.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using namespace hcarnot;

namespace {

// All floating-point output goes through a fixed 17-significant-digit
// formatter so byte-identical reruns do not depend on shortest-round-trip
// printing quirks.
json jnum(double x) {
    if (!std::isfinite(x)) return json(x > 0 ? "inf" : (x < 0 ? "-inf" : "nan"));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return json::parse(buf);
}

json jvec(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(jnum(v(i)));
    return a;
}

json jpoint(const GroupPoint& p) {
    return json{{"v", jvec(p.v)}, {"z", jvec(p.z)}};
}

struct Common {
    std::string group = "H1";
    std::string config;
    uint64_t seed = 7;
    int nodes = 20000;
    int grid = 48;
    double tol = 1e-2;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--group", c.group, "Built-in group name (H1, H2, ...)");
    cmd->add_option("--config", c.config, "JSON config supplying flag defaults");
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--nodes", c.nodes, "Sphere quadrature node count");
    cmd->add_option("--grid", c.grid, "Grid nodes per axis for the capacity solver");
    cmd->add_option("--tol", c.tol, "Tolerance override");
    cmd->add_option("--out", c.out, "Output directory (JSON/CSV files; stdout otherwise)");
}

void apply_config(Common& c) {
    if (c.config.empty()) return;
    std::ifstream in(c.config);
    if (!in) throw std::invalid_argument("config file not readable: " + c.config);
    json j = json::parse(in);
    if (j.contains("group")) c.group = j["group"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("nodes")) c.nodes = j["nodes"].get<int>();
    if (j.contains("grid")) c.grid = j["grid"].get<int>();
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
}

void emit(const Common& c, const std::string& name, const json& body) {
    json doc;
    doc["schema"] = "1";
    doc["command"] = name;
    doc["group"] = c.group;
    doc["seed"] = c.seed;
    doc["report"] = body;
    std::string text = doc.dump(2);
    text.push_back('\n');
    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        std::ofstream f(std::filesystem::path(c.out) / (name + ".json"),
                        std::ios::binary);
        f << text;
    }
    std::cout << text;
}

void emit_csv(const Common& c, const std::string& name,
              const std::string& header,
              const std::vector<std::pair<double, double>>& rows) {
    if (c.out.empty()) return;
    std::filesystem::create_directories(c.out);
    std::ofstream f(std::filesystem::path(c.out) / (name + ".csv"), std::ios::binary);
    f << header << "\n";
    char buf[160];
    for (const auto& [a, b] : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", a, b);
        f << buf;
    }
}

GroupPoint parse_point(const HTypeAlgebra& alg, const std::string& text) {
    std::vector<double> xs;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) xs.push_back(std::stod(tok));
    if (static_cast<int>(xs.size()) != alg.n1() + alg.n2())
        throw std::invalid_argument("point needs " + std::to_string(alg.n1() + alg.n2()) +
                                    " coordinates: " + text);
    GroupPoint p{Vec(alg.n1()), Vec(alg.n2())};
    for (int i = 0; i < alg.n1(); ++i) p.v(i) = xs[i];
    for (int m = 0; m < alg.n2(); ++m) p.z(m) = xs[alg.n1() + m];
    return p;
}

int run_calibrate(Common& c, const std::vector<double>& ps) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K(alg);
    double cc = K.calibrate(c.tol);
    K.set_m0(K.analytic_m0());
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    json body;
    body["c"] = jnum(cc);
    body["m0"] = jnum(K.m0());
    body["sigma_total"] = jnum(quad.weight_sum());
    body["node_count"] = quad.size();
    body["quadrature_checksum"] = quad.checksum();
    json kap = json::object();
    for (double p : ps) {
        char key[32];
        std::snprintf(key, sizeof(key), "%g", p);
        kap[key] = jnum(kappa(K, quad, p));
    }
    body["kappa"] = kap;
    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        save_quadrature(quad, (std::filesystem::path(c.out) / "quadrature.json").string());
    }
    emit(c, "calibrate", body);
    return 0;
}

int run_capacity(Common& c, double r, double R, double p) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    auto rep = capacity_modulus_equality_check(
        K, quad, Condenser::ring(alg.origin(), r, R), p, c.grid);
    json body;
    body["r"] = jnum(r);
    body["R"] = jnum(R);
    body["p"] = jnum(p);
    body["grid"] = rep.grid_n;
    body["exact"] = jnum(rep.exact);
    body["variational"] = jnum(rep.variational);
    body["modulus"] = jnum(rep.modulus);
    body["gap_variational_exact"] = jnum(rep.gap_variational_exact);
    body["gap_modulus_exact"] = jnum(rep.gap_modulus_exact);
    body["infinite"] = rep.infinite;
    emit(c, "capacity", body);
    return 0;
}

int run_modulus(Common& c, double a, double b) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    double full = radial_family_modulus(K, quad, [](const GroupPoint&) { return true; }, a, b);
    double half = radial_family_modulus(
        K, quad, [](const GroupPoint& y) { return y.v(0) > 0.0; }, a, b);
    json body;
    body["a"] = jnum(a);
    body["b"] = jnum(b);
    body["sigma_full_sphere"] = jnum(sigma_measure(K, quad, [](const GroupPoint&) { return true; }));
    body["modulus_full_sphere"] = jnum(full);
    body["modulus_half_sphere"] = jnum(half);
    body["kappa_Q"] = jnum(kappa(K, quad, alg.homogeneous_dim()));
    emit(c, "modulus", body);
    return 0;
}

int run_polar_check(Common& c) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    struct Probe {
        const char* name;
        std::function<double(const GroupPoint&)> u;
    };
    std::vector<Probe> probes = {
        {"gaussian_of_norm", [&](const GroupPoint& p) { return std::exp(-K.norm(p)); }},
        {"horizontal_quadratic", [](const GroupPoint& p) { return p.v.squaredNorm(); }},
        {"center_cosine", [](const GroupPoint& p) { return std::cos(p.z(0)); }},
    };
    json rows = json::array();
    for (const auto& pr : probes) {
        double pol = polar_integrate(K, quad, pr.u, 1.5);
        double car = cartesian_integrate(K, pr.u, 1.5, 400000, c.seed + 11);
        json row;
        row["integrand"] = pr.name;
        row["polar"] = jnum(pol);
        row["cartesian"] = jnum(car);
        row["relative_gap"] = jnum(std::abs(pol - car) / std::max(std::abs(car), 1e-300));
        rows.push_back(row);
    }
    json body;
    body["probes"] = rows;
    body["sigma_total"] = jnum(quad.weight_sum());
    body["Q"] = alg.homogeneous_dim();
    emit(c, "polar-check", body);
    return 0;
}

int run_map_report(Common& c, const std::string& map_text, int configs) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    QRMapDescriptor f = QRMapDescriptor::parse(map_text, alg);
    f.validate(alg);
    Distortion dist = distortion(K, f, 1.5, 20000, c.seed + 3);
    json body;
    body["map"] = f.describe();
    body["conformal"] = f.is_conformal();
    body["total_winding"] = f.total_winding();
    body["distortion"] = json{{"K", jnum(dist.K)},
                              {"K_O", jnum(dist.K_O)},
                              {"K_I", jnum(dist.K_I)},
                              {"skipped", dist.skipped}};
    GroupPoint probe{Vec::Constant(alg.n1(), 0.4), Vec::Constant(alg.n2(), 0.1)};
    body["formal_jacobian_probe"] = jnum(formal_jacobian(alg, f, probe));
    body["counting_n_origin"] = counting_n(K, f, 1.0, alg.origin());
    json verdicts = json::array();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < configs; ++i) {
        double a = 0.5 + uni(rng);
        double b = a * std::exp(2.0 + uni(rng));
        double phase = uni(rng) * 2.0 * M_PI;
        auto E = [phase](const GroupPoint& y) {
            return std::cos(phase) * y.v(0) + std::sin(phase) * y.v(1) > -0.2;
        };
        ModuleInequalityReport rep = module_inequality_report(K, quad, f, E, a, b);
        json v;
        v["a"] = jnum(a);
        v["b"] = jnum(b);
        v["outer_holds"] = rep.outer.holds;
        v["inner_holds"] = rep.inner.holds;
        v["lifting_holds"] = rep.lifting.holds;
        v["outer_margin"] = jnum(rep.outer.margin);
        v["inner_margin"] = jnum(rep.inner.margin);
        v["lifting_margin"] = jnum(rep.lifting.margin);
        verdicts.push_back(v);
    }
    body["module_inequalities"] = verdicts;
    emit(c, "map-report", body);
    return 0;
}

int run_defects(Common& c, const std::string& map_text, double r,
                const std::string& targets_text, bool infinity_target) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    QRMapDescriptor f = QRMapDescriptor::parse(map_text, alg);
    f.validate(alg);
    std::vector<GroupPoint> targets;
    if (!targets_text.empty()) {
        std::stringstream ss(targets_text);
        std::string tok;
        while (std::getline(ss, tok, ';'))
            if (!tok.empty()) targets.push_back(parse_point(alg, tok));
    }
    DefectReport rep = defect_report(K, quad, f, r, targets, infinity_target);
    json body;
    body["map"] = f.describe();
    body["r"] = jnum(r);
    body["sigma_M"] = jnum(rep.sigma_M);
    body["sigma_m"] = jnum(rep.sigma_m);
    body["nu_r1"] = jnum(rep.nu_r1);
    body["nu_sigma_M"] = jnum(rep.nu_sigma_M);
    body["defect_sum"] = jnum(rep.defect_sum);
    json rows = json::array();
    std::vector<std::pair<double, double>> csv;
    for (size_t j = 0; j < rep.defects.size(); ++j) {
        json row;
        row["target"] = j < rep.targets.size() ? jpoint(rep.targets[j]) : json("infinity");
        row["n"] = rep.n_values[j];
        row["defect"] = jnum(rep.defects[j]);
        row["delta"] = jnum(rep.delta[j]);
        rows.push_back(row);
        csv.emplace_back(static_cast<double>(j), rep.defects[j]);
    }
    body["targets"] = rows;
    emit_csv(c, "defects", "j,defect", csv);
    emit(c, "defects", body);
    return 0;
}

int run_exceptional(Common& c, const std::string& map_text, double eps0, double r_lo,
                    double r_hi, int count, double t) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    SphereQuadrature quad = build_sphere_quadrature(K, c.nodes, c.seed);
    QRMapDescriptor f = QRMapDescriptor::parse(map_text, alg);
    f.validate(alg);
    ASamples A = sample_a_of_r(K, quad, f, r_lo, r_hi, count);
    Distortion dist = distortion(K, f, 1.5, 20000, c.seed + 3);
    ExceptionalSet E = exceptional_set(A, eps0, alg.homogeneous_dim(),
                                       std::max(1.0, dist.K_I));
    auto checks = comparability_checks(K, quad, f, E, A, alg.origin(), t, 40, c.seed + 5);
    int ok = 0;
    for (const auto& chk : checks)
        if (chk.ok_a && chk.ok_nu) ++ok;
    json body;
    body["map"] = f.describe();
    body["eps0"] = jnum(eps0);
    body["t"] = jnum(t);
    body["total_log_measure"] = jnum(E.total_log_measure);
    body["omega"] = jnum(E.omega(t));
    body["tier_count"] = E.tiers.size();
    json tiers = json::array();
    for (const auto& tier : E.tiers) {
        json tj;
        tj["m"] = tier.m;
        tj["r0"] = jnum(tier.r0);
        tj["d_m"] = jnum(tier.d_m);
        tj["interval_count"] = tier.intervals.size();
        tj["log_measure"] = jnum(tier.log_measure);
        tiers.push_back(tj);
    }
    body["tiers"] = tiers;
    body["comparability_checked"] = checks.size();
    body["comparability_ok"] = ok;
    std::vector<std::pair<double, double>> acsv, ncsv;
    for (size_t i = 0; i < A.r.size(); ++i) acsv.emplace_back(A.r[i], A.a[i]);
    for (size_t i = 0; i < A.r.size(); ++i)
        ncsv.emplace_back(A.r[i], nu_average(K, quad, f, A.r[i], alg.origin(), 1.0).value);
    emit_csv(c, "a_of_r", "r,A", acsv);
    emit_csv(c, "nu_of_r", "r,nu", ncsv);
    emit(c, "exceptional", body);
    return 0;
}

int run_decompose(Common& c, double s, double sprime, double varpi, double M, double K_O,
                  double K_I, double c_Q, double denom) {
    apply_config(c);
    HTypeAlgebra alg = HTypeAlgebra::by_name(c.group);
    KaplanNorm K = calibrated_norm(alg);
    DecompositionReport rep =
        ball_decomposition(K, s, sprime, varpi, M, K_O, K_I, c_Q, denom, c.seed);
    json body;
    body["s"] = jnum(rep.s);
    body["sprime"] = jnum(rep.sprime);
    body["d"] = jnum(rep.d);
    body["theta"] = jnum(rep.theta);
    body["varkappa"] = jnum(rep.varkappa);
    body["denominator"] = jnum(denom);
    body["linking_constant"] = jnum(c_Q);
    body["rings"] = rep.rings;
    body["ball_count"] = rep.balls.size();
    body["measured_C3"] = jnum(rep.measured_C3);
    body["max_U_multiplicity"] = rep.max_U_multiplicity;
    body["max_Z_multiplicity"] = rep.max_Z_multiplicity;
    body["z_multiplicity_bound"] = jnum(rep.z_multiplicity_bound);
    body["cover_ok"] = rep.cover_ok;
    body["z_in_sprime"] = rep.z_in_sprime;
    emit(c, "decompose", body);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carnot-group value-distribution toolkit"};
    app.require_subcommand(1);

    Common c;
    std::vector<double> kappa_ps = {2.0, 4.0};
    double cap_r = 1.0, cap_R = std::exp(1.0), cap_p = 4.0;
    double mod_a = 1.0, mod_b = std::exp(1.0);
    std::string map_text = "identity", targets_text;
    bool infinity_target = false;
    int configs = 5, sample_count = 25;
    double def_r = 5.0, eps0 = 0.15, r_lo = 0.25, r_hi = 16.0, sphere_t = 1.0;
    double dec_s = 1.0, dec_sprime = 1.4, varpi = 1.0, mult_M = 8.0;
    double dec_KO = 1.0, dec_KI = 1.0, dec_cQ = default_loewner_constant(), dec_denom = 1.0;

    auto* cal = app.add_subcommand("calibrate", "Calibrate the gauge and build a quadrature");
    add_common(cal, c);
    cal->add_option("--kappa-p", kappa_ps, "Exponents p to report kappa(G,p) for");

    auto* cap = app.add_subcommand("capacity", "Ring capacity: closed form vs grid minimum");
    add_common(cap, c);
    cap->add_option("--r", cap_r, "Inner radius");
    cap->add_option("--R", cap_R, "Outer radius");
    cap->add_option("--p", cap_p, "Capacity exponent");

    auto* mod = app.add_subcommand("modulus", "Radial curve-family modulus of a ring");
    add_common(mod, c);
    mod->add_option("--a", mod_a, "Inner radius");
    mod->add_option("--b", mod_b, "Outer radius");

    auto* pol = app.add_subcommand("polar-check", "Polar vs Cartesian integration agreement");
    add_common(pol, c);

    auto* mapr = app.add_subcommand("map-report", "Distortion and module-inequality verdicts");
    add_common(mapr, c);
    mapr->add_option("--map", map_text, "Map descriptor (identity, dilate:l, winding:k, ...)");
    mapr->add_option("--configs", configs, "Seeded ring-family configurations");

    auto* def = app.add_subcommand("defects", "Defect report for targets under a map");
    add_common(def, c);
    def->add_option("--map", map_text, "Map descriptor");
    def->add_option("--r", def_r, "Probe radius");
    def->add_option("--targets", targets_text, "Semicolon-separated points x,y,...,t");
    def->add_flag("--infinity", infinity_target, "Include the infinite target");

    auto* exc = app.add_subcommand("exceptional", "Exceptional radii and comparability");
    add_common(exc, c);
    exc->add_option("--map", map_text, "Map descriptor");
    exc->add_option("--eps0", eps0, "Comparability tolerance in (0, 1/5)");
    exc->add_option("--r-lo", r_lo, "A(r) sampling lower radius");
    exc->add_option("--r-hi", r_hi, "A(r) sampling upper radius");
    exc->add_option("--count", sample_count, "A(r) sample count");
    exc->add_option("--t", sphere_t, "Target sphere radius");

    auto* dec = app.add_subcommand("decompose", "Ball decomposition of B(0,s)");
    add_common(dec, c);
    dec->add_option("--s", dec_s, "Ball radius s");
    dec->add_option("--sprime", dec_sprime, "Enlarged radius s'");
    dec->add_option("--varpi", varpi, "Quasi-metric constant");
    dec->add_option("--M", mult_M, "Doubling multiplicity constant");
    dec->add_option("--KO", dec_KO, "Outer distortion");
    dec->add_option("--KI", dec_KI, "Inner distortion");
    dec->add_option("--cQ", dec_cQ, "Linking-constant lower bound");
    dec->add_option("--denom", dec_denom, "Covering-radius denominator");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) return run_calibrate(c, kappa_ps);
        if (cap->parsed()) return run_capacity(c, cap_r, cap_R, cap_p);
        if (mod->parsed()) return run_modulus(c, mod_a, mod_b);
        if (pol->parsed()) return run_polar_check(c);
        if (mapr->parsed()) return run_map_report(c, map_text, configs);
        if (def->parsed()) return run_defects(c, map_text, def_r, targets_text, infinity_target);
        if (exc->parsed())
            return run_exceptional(c, map_text, eps0, r_lo, r_hi, sample_count, sphere_t);
        if (dec->parsed())
            return run_decompose(c, dec_s, dec_sprime, varpi, mult_M, dec_KO, dec_KI, dec_cQ,
                                 dec_denom);
    } catch (const std::exception& e) {
        json err;
        err["schema"] = "1";
        err["error"] = json{{"type", "precondition"}, {"message", e.what()}};
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
    return 0;
}
