#include "integ/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>

#include "integ/affine.hpp"
#include "integ/bundleclass.hpp"
#include "integ/errors.hpp"
#include "integ/fibergeom.hpp"
#include "integ/integrability.hpp"
#include "integ/report.hpp"
#include "integ/symplectic.hpp"

namespace integ::cli {

namespace {

using nlohmann::json;
namespace bc = bundleclass;
namespace ig = integrability;

enum class Status { Passed, Failed, Inconclusive, Skipped, Informational };

const char* status_name(Status s) {
    switch (s) {
        case Status::Passed: return "passed";
        case Status::Failed: return "failed";
        case Status::Inconclusive: return "inconclusive";
        case Status::Skipped: return "skipped";
        case Status::Informational: break;
    }
    return "informational";
}

json skipped(const std::string& why) { return {{"status", "skipped"}, {"reason", why}}; }

const char* mode_name(bc::Mode m) { return m == bc::Mode::Complete ? "complete" : m == bc::Mode::Partial ? "partial" : "noncommutative"; }

class Pipeline {
public:
    Pipeline(const SystemSpec& spec, Execution exec)
        : spec_(spec), exec_(exec), chart_(spec.n, spec.coords), rng_(spec.seed) {
        if (spec_.mode == SpecMode::Noncommutative || (spec_.mode == SpecMode::Auto && !spec_.closure.empty()))
            mode_ = bc::Mode::Noncommutative;
        else if (spec_.mode == SpecMode::Partial || (spec_.mode == SpecMode::Auto && spec_.k() < spec_.n))
            mode_ = bc::Mode::Partial;
        else
            mode_ = bc::Mode::Complete;
    }

    CheckOutcome run(bool lattice_only) {
        json stages = json::object();
        json timing = json::object();
        auto timed = [&](const char* name, auto&& fn) {
            const auto t0 = std::chrono::steady_clock::now();
            json out;
            try {
                out = fn();
            } catch (const std::exception& e) {
                out = {{"status", "failed"}, {"error", e.what()}};
            }
            const auto t1 = std::chrono::steady_clock::now();
            timing[std::string(name) + "_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            stages[name] = std::move(out);
        };

        timed("structure", [&] { return structure(); });
        if (!lattice_only) timed("completeness", [&] { return completeness(); });
        timed("lattice", [&] { return lattice(); });
        if (!lattice_only) {
            timed("action_angle", [&] { return action_angle(); });
            timed("connection", [&] { return connection(); });
            timed("global", [&] { return global(); });
        }

        bool failed = false, inconclusive = false;
        for (const auto& [name, st] : stages.items()) {
            const std::string s = st.at("status");
            failed |= s == "failed";
            inconclusive |= s == "inconclusive";
        }
        CheckOutcome out;
        out.exit_code = failed ? kExitFailed : inconclusive ? kExitInconclusive : kExitPassed;

        json functions = json::array();
        for (const auto& f : spec_.functions) functions.push_back({{"name", f.name}, {"source", f.source}});
        out.report = {
            {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
            {"input",
             {{"file", std::filesystem::path(spec_.path).filename().string()},
              {"fnv1a64", hex64(spec_.hash)},
              {"seed", spec_.seed},
              {"samples", spec_.samples}}},
            {"system",
             {{"name", spec_.name},
              {"dim", spec_.coords.size()},
              {"n", spec_.n},
              {"k", spec_.k()},
              {"coords", spec_.coords},
              {"functions", functions},
              {"mode", mode_name(mode_)}}},
            {"stages", stages},
            {"status", failed ? "failed" : inconclusive ? "inconclusive" : "passed"},
            {"exit_code", out.exit_code},
            {"timing", timing},
        };
        return out;
    }

private:
    const SystemSpec& spec_;
    Execution exec_;
    symp::SymplecticChart chart_;
    Rng rng_;
    bc::Mode mode_;

    std::vector<Vec> samples_;
    std::vector<VectorField> frame_;
    std::string frame_origin_;
    Status structure_status_ = Status::Skipped;
    Status completeness_status_ = Status::Skipped;
    Status casimir_status_ = Status::Skipped;
    std::optional<fibergeom::PeriodLattice> lattice_;
    std::optional<flows::FlowAction> action_;

    static json with_status(Status s, json body) {
        body["status"] = status_name(s);
        return body;
    }

    Vec base_point() const { return spec_.pipeline.base_point ? *spec_.pipeline.base_point : samples_.front(); }

    ig::Tolerances tolerances() const {
        ig::Tolerances t;
        t.involution = spec_.tol.involution;
        t.closure = spec_.tol.closure;
        return t;
    }

    std::unique_ptr<ig::CoinducedStructure> coinduced() const {
        if (spec_.closure.empty()) return nullptr;
        const auto names = spec_.function_names();
        const std::size_t k = names.size();
        std::vector<std::vector<expr::Expression>> S(k, std::vector<expr::Expression>(k, expr::Expression::constant(0, names)));
        for (const auto& c : spec_.closure) {
            S[c.a][c.b] = expr::parse(c.source, names);
            S[c.b][c.a] = expr::parse("-(" + c.source + ")", names);
        }
        return std::make_unique<ig::CoinducedStructure>(names, std::move(S));
    }

    json structure() {
        samples_ = sample_box(spec_.box, spec_.samples, rng_, spec_.singular);
        const auto tol = tolerances();
        json out;
        ig::BracketReport rep;
        if (mode_ == bc::Mode::Noncommutative) {
            const auto S = coinduced();
            const auto paired = ig::with_fiber_partners(spec_.F, samples_, rng_, 0.1);
            rep = ig::check_closure(spec_.F, paired, chart_, tol, S.get(), exec_);
            out["test"] = "closure";
            out["closure"] = residual_claim(rep.closure_residual, tol.closure);
            out["closure_verifiable"] = rep.closure_verifiable;
            out["fiber_groups"] = rep.fiber_groups;
            out["s_rank"] = rep.verdict.rank;
            out["expected_s_rank"] = 2 * (static_cast<int>(spec_.k()) - static_cast<int>(spec_.n));
            out["rank_drop"] = rep.rank_drop;
            if (S && !spec_.C.empty()) {
                std::vector<Vec> base;
                for (const auto& s : rep.samples) base.push_back(s.values);
                const std::size_t expected = 2 * spec_.n - spec_.k();
                const auto cr = ig::verify_casimirs(*S, spec_.C, base, expected, spec_.tol.casimir);
                casimir_status_ = cr.passed() ? Status::Passed : Status::Failed;
                json cj = {{"residual", residual_claim(cr.residual, cr.tolerance)},
                           {"min_rank", cr.min_rank},
                           {"expected", cr.expected},
                           {"independent", cr.independent},
                           {"status", status_name(casimir_status_)}};
                if (cr.offending_sample) cj["offending_sample"] = to_json(*cr.offending_sample);
                out["casimirs"] = cj;
                frame_ = ig::derived_fields(spec_.C, spec_.F, chart_);
                frame_origin_ = "Hamiltonian fields of the Casimirs pulled back by F";
            } else {
                out["casimirs"] = nullptr;
            }
        } else {
            rep = ig::check_involution(spec_.F, samples_, chart_, tol, exec_);
            out["test"] = "involution";
            for (const auto& f : spec_.F) frame_.push_back(symp::hamiltonian_field(f, chart_));
            frame_origin_ = "Hamiltonian fields of F";
        }
        int min_rank = static_cast<int>(spec_.k());
        for (const auto& s : rep.samples) min_rank = std::min(min_rank, s.jacobian_rank);
        if (mode_ == bc::Mode::Noncommutative) out["max_bracket"] = number(rep.max_involution_residual);
        else out["max_bracket"] = residual_claim(rep.max_involution_residual, tol.involution);
        out["worst_pair"] = {rep.worst_pair.first + 1, rep.worst_pair.second + 1};
        out["jacobian_rank_min"] = min_rank;
        out["antisymmetry_error"] = number(rep.max_antisymmetry_error);
        out["verdict"] = rep.verdict.label();
        out["reason"] = rep.verdict.reason;
        out["diagnostics"] = rep.diagnostics;

        if (mode_ == bc::Mode::Noncommutative && !rep.closure_verifiable) structure_status_ = Status::Inconclusive;
        else if (rep.verdict.kind == ig::VerdictKind::Failed) structure_status_ = Status::Failed;
        else if (casimir_status_ == Status::Failed) structure_status_ = Status::Failed;
        else structure_status_ = Status::Passed;
        if (structure_status_ != Status::Passed) frame_.clear();
        return with_status(structure_status_, out);
    }

    json completeness() {
        if (samples_.empty()) return skipped("no samples");
        std::vector<Vec> points;
        if (spec_.pipeline.base_point) points.push_back(*spec_.pipeline.base_point);
        for (std::size_t i = 0; i < samples_.size() && points.size() < spec_.pipeline.probes; ++i)
            points.push_back(samples_[i]);
        flows::IntegratorOptions opt;
        opt.tol = 1e-9;
        opt.horizon = spec_.pipeline.horizon;
        opt.blowup_bound = spec_.pipeline.blowup;
        json probes = json::array();
        bool blowup = false;
        for (std::size_t l = 0; l < spec_.F.size(); ++l) {
            const auto X = symp::hamiltonian_field(spec_.F[l], chart_);
            const auto verdicts = flows::completeness_probe(X, points, spec_.pipeline.horizon,
                                                            spec_.pipeline.blowup, opt, exec_);
            for (std::size_t p = 0; p < verdicts.size(); ++p) {
                blowup |= verdicts[p].blowup;
                json pj = {{"field", spec_.functions[l].name}, {"point", to_json(points[p])},
                           {"verdict", verdicts[p].label()}};
                if (verdicts[p].blowup) pj["blowup_time"] = number(verdicts[p].blowup_time);
                probes.push_back(pj);
            }
        }
        completeness_status_ = blowup ? Status::Failed : Status::Passed;
        return with_status(completeness_status_,
                           {{"heuristic", true},
                            {"note", "no blow-up within the horizon is evidence of completeness, not a proof"},
                            {"horizon", spec_.pipeline.horizon},
                            {"blowup_bound", spec_.pipeline.blowup},
                            {"probes", probes}});
    }

    json lattice() {
        if (!spec_.pipeline.lattice) return skipped("disabled");
        if (frame_.empty())
            return skipped(structure_status_ == Status::Passed ? "no fiber frame (declare casimirs)"
                                                               : "structure check did not pass");
        const Vec base = base_point();
        fibergeom::LatticeOptions lo;
        lo.radius = spec_.pipeline.lattice_radius;
        lo.grid_step = spec_.pipeline.lattice_step;
        lo.return_tol = spec_.tol.lattice;
        lo.integrator.blowup_bound = spec_.pipeline.blowup;
        lo.integrator.horizon = std::max(spec_.pipeline.horizon, 4 * lo.radius);
        action_.emplace(frame_, base, lo.integrator);
        lattice_ = fibergeom::detect_lattice(*action_, lo, exec_);
        const auto type = fibergeom::classify_fiber(*lattice_);
        json basis = json::array(), residuals = json::array();
        for (std::size_t i = 0; i < lattice_->basis.size(); ++i) {
            basis.push_back(to_json(lattice_->basis[i]));
            residuals.push_back(residual_claim(lattice_->residuals[i], lo.return_tol));
        }
        return with_status(Status::Passed, {{"frame", frame_origin_},
                                            {"base_point", to_json(base)},
                                            {"m", lattice_->m},
                                            {"h", lattice_->rank()},
                                            {"fiber", type.label()},
                                            {"basis", basis},
                                            {"residuals", residuals},
                                            {"candidates", lattice_->candidates},
                                            {"search_radius", lattice_->search_radius},
                                            {"grid_step", lattice_->grid_step},
                                            {"note", lattice_->note.empty()
                                                         ? "periods searched only inside the box"
                                                         : lattice_->note + "; periods searched only inside the box"}});
    }

    json action_angle() {
        if (!spec_.pipeline.action_angle) return skipped("disabled");
        if (mode_ != bc::Mode::Complete) return skipped("needs a complete system (k = n)");
        if (!lattice_) return skipped("no period lattice");
        if (spec_.k() != spec_.n) return skipped("needs k = n");
        fibergeom::ActionAngleOptions opt;
        opt.lattice.radius = spec_.pipeline.lattice_radius;
        opt.lattice.return_tol = spec_.tol.lattice;
        const fibergeom::ActionAngleChart aa(spec_.F, chart_, *action_, *lattice_,
                                             fibergeom::default_primitive(chart_), opt);
        const Vec base = action_->base();
        std::vector<Vec> pts{base};
        std::uniform_real_distribution<double> u(-0.05, 0.05);
        for (int i = 0; i < 2; ++i) {
            Vec z = base;
            for (Eigen::Index c = 0; c < z.size(); ++c) z[c] += u(rng_);
            pts.push_back(z);
        }
        constexpr double step = 1e-3;
        const double darboux = fibergeom::darboux_residual(aa.as_map(), pts, step, chart_, exec_);
        const Vec coords = aa.coordinates(base);
        const auto n = static_cast<Eigen::Index>(spec_.n);
        json section = json::array();
        for (auto i : aa.section_coordinates()) section.push_back(spec_.coords[i]);
        const bool ok = darboux < spec_.tol.darboux;
        return with_status(ok ? Status::Passed : Status::Failed,
                           {{"actions", to_json(coords.head(n))},
                            {"angles", to_json(coords.tail(n))},
                            {"darboux", residual_claim(darboux, spec_.tol.darboux)},
                            {"finite_difference_step", step},
                            {"darboux_points", pts.size()},
                            {"section", section},
                            {"normalization",
                             "compact: I = loop integral of p dq / 2pi, y = -2pi (period coefficient); "
                             "noncompact: I = e . F for a unit completion vector e, y = -(flow time)"}});
    }

    json connection() {
        if (!spec_.pipeline.connection) return skipped("disabled");
        if (frame_.empty()) return skipped("no fiber frame");
        const affine::ConnectionFrame cf{frame_, spec_.box};
        const std::size_t m = frame_.size(), d = spec_.coords.size();
        std::vector<Vec> pts;
        for (std::size_t i = 0; i < samples_.size() && pts.size() < 5; ++i) pts.push_back(samples_[i]);

        std::vector<expr::Expression> coeffs;
        for (std::size_t j = 0; j < m; ++j)
            coeffs.push_back(expr::parse("1 + 0.25*" + spec_.coords[(j + 1) % d] + "^2", spec_.coords));
        const VectorField Z = linear_combination(coeffs, frame_);
        const VectorField Y = linear_combination(
            std::vector<expr::Expression>{expr::Expression::variable(spec_.n, spec_.coords)},
            std::vector<VectorField>{frame_.back()});

        std::vector<double> tors(pts.size()), curv(pts.size()), geo(pts.size()), omega(pts.size());
        for_each_index(pts.size(), exec_, [&](std::size_t s) {
            const Vec& z = pts[s];
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i + 1; j < m; ++j)
                    tors[s] = std::max(tors[s], (affine::torsion(cf, i, j, z) +
                                                 symp::lie_bracket(frame_[i], frame_[j], z)).cwiseAbs().maxCoeff());
            curv[s] = affine::curvature(cf, frame_.front(), Y, Z, z).cwiseAbs().maxCoeff();
            flows::IntegratorOptions go;
            go.tol = 1e-12;
            for (std::size_t i = 0; i < m; ++i) geo[s] = std::max(geo[s], affine::geodesic_residual(cf, i, z, 1.0, go));
            omega[s] = (affine::omega_connection(spec_.F, frame_, frame_.front(), Y, z, chart_) -
                        affine::nabla(cf, frame_.front(), Y, z))
                           .cwiseAbs()
                           .maxCoeff();
        });
        auto worst = [](const std::vector<double>& v) {
            double w = 0;
            for (double x : v) w = std::max(w, x);
            return w;
        };
        const json body = {{"samples", pts.size()},
                           {"frame", frame_origin_},
                           {"torsion_plus_bracket", residual_claim(worst(tors), 1e-8)},
                           {"curvature", residual_claim(worst(curv), 1e-6)},
                           {"geodesic", residual_claim(worst(geo), 1e-7)},
                           {"omega_connection", residual_claim(worst(omega), spec_.tol.connection)}};
        bool ok = true;
        for (const char* key : {"torsion_plus_bracket", "curvature", "geodesic", "omega_connection"})
            ok &= body.at(key).at("passed").get<bool>();
        return with_status(ok ? Status::Passed : Status::Failed, body);
    }

    json global() {
        if (!spec_.pipeline.global) return skipped("disabled");
        if (!lattice_) return skipped("no period lattice");
        const std::size_t m = lattice_->m, h = lattice_->rank();
        auto tri = [](Status s) {
            return s == Status::Passed ? bc::Tri::True : s == Status::Failed ? bc::Tri::False : bc::Tri::Unknown;
        };
        bc::UpstreamFlags up;
        up.structure = tri(structure_status_);
        up.complete_fields = tri(completeness_status_);
        up.fibers = spec_.fibers_connected;
        up.casimirs = mode_ == bc::Mode::Noncommutative ? tri(casimir_status_) : bc::Tri::True;
        const auto v = bc::decide({m - h, h}, spec_.topology, mode_, up);

        const std::string topo_source =
            spec_.topology.provenance == bc::Provenance::DerivedTrivially ? "derived-trivially" : "declared";
        json hyps = json::array();
        hyps.push_back({{"name", "structure"}, {"value", bc::to_string(up.structure)}, {"source", "verified"}});
        hyps.push_back({{"name", "fibers_connected"}, {"value", bc::to_string(up.fibers)}, {"source", "declared"}});
        hyps.push_back({{"name", "complete_fields"}, {"value", bc::to_string(up.complete_fields)}, {"source", "heuristic"}});
        if (mode_ == bc::Mode::Noncommutative)
            hyps.push_back({{"name", "casimirs"}, {"value", bc::to_string(up.casimirs)}, {"source", "verified"}});
        hyps.push_back({{"name", "simply_connected"}, {"value", bc::to_string(spec_.topology.simply_connected)}, {"source", topo_source}});
        hyps.push_back({{"name", "H2_zero"}, {"value", bc::to_string(spec_.topology.H2_zero)}, {"source", topo_source}});
        hyps.push_back({{"name", "pi2_zero"}, {"value", bc::to_string(spec_.topology.pi2_zero)}, {"source", topo_source}});

        return with_status(Status::Informational, {{"theorem", bc::to_string(v.theorem)},
                                                   {"trivial", bc::to_string(v.trivial)},
                                                   {"group", {{"a", m - h}, {"b", h}}},
                                                   {"factors", v.factors},
                                                   {"splitting", v.splitting},
                                                   {"unmet", v.unmet},
                                                   {"diagnostics", v.diagnostics},
                                                   {"base", spec_.topology.base},
                                                   {"hypotheses", hyps}});
    }
};

}  // namespace

void apply_overrides(SystemSpec& spec, const Overrides& o) {
    if (o.seed) spec.seed = *o.seed;
    if (o.samples) {
        if (*o.samples == 0) throw InputError("--samples must be positive");
        spec.samples = *o.samples;
    }
    auto set = [](double& dst, const std::optional<double>& v, const char* flag) {
        if (!v) return;
        if (!(*v > 0)) throw InputError(std::string(flag) + " must be positive");
        dst = *v;
    };
    set(spec.tol.involution, o.involution, "--tol-involution");
    set(spec.tol.closure, o.closure, "--tol-closure");
    set(spec.tol.lattice, o.lattice, "--tol-lattice");
    set(spec.tol.darboux, o.darboux, "--tol-darboux");
    set(spec.tol.casimir, o.casimir, "--tol-casimir");
    set(spec.tol.connection, o.connection, "--tol-connection");
}

CheckOutcome run_check(const SystemSpec& spec, Execution exec) { return Pipeline(spec, exec).run(false); }

CheckOutcome run_lattice(const SystemSpec& spec, Execution exec) { return Pipeline(spec, exec).run(true); }

std::vector<flows::TrajectoryPoint> run_flow(const SystemSpec& spec, const std::string& field, double t) {
    const symp::SymplecticChart chart(spec.n, spec.coords);
    std::optional<VectorField> X;
    for (std::size_t i = 0; i < spec.functions.size(); ++i)
        if (spec.functions[i].name == field) X = symp::hamiltonian_field(spec.F[i], chart);
    for (std::size_t i = 0; i < spec.casimirs.size() && !X; ++i)
        if (spec.casimirs[i].name == field) X = integrability::derived_fields({spec.C[i]}, spec.F, chart).front();
    if (!X) throw InputError("unknown field '" + field + "'");
    Vec start;
    if (spec.pipeline.base_point) {
        start = *spec.pipeline.base_point;
    } else {
        Rng rng(spec.seed);
        start = sample_box(spec.box, 1, rng, spec.singular).front();
    }
    flows::IntegratorOptions opt;
    opt.horizon = std::max(opt.horizon, std::abs(t));
    opt.blowup_bound = spec.pipeline.blowup;
    std::vector<flows::TrajectoryPoint> traj;
    flows::integrate(*X, start, t, opt, &traj);
    return traj;
}

}  // namespace integ::cli
