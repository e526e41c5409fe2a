#pragma once

#include "tangleforge/aqc.hpp"
#include "tangleforge/causal.hpp"
#include "tangleforge/csv.hpp"
#include "tangleforge/faultsim.hpp"
#include "tangleforge/invariants.hpp"
#include "tangleforge/rewrite.hpp"
#include "tangleforge/tm_format.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace tangleforge::cli {

using json = nlohmann::ordered_json;

/**
 * Outcome of one CLI invocation. stdout carries the payload (JSON, or
 * CSV for series-shaped output); the schema id and command echo go to
 * stderr as diagnostics. Exit codes: 0 success, 1 domain error, 2 usage
 * error. Payloads are byte-deterministic given argv (seeds included).
 */
struct RunReport {
    std::string command;
    std::string schema;
    std::string stdout_text;
    std::string stderr_text;
    int exit_code = 0;
};

namespace detail {

inline json estimator_json(const GaussianEstimator& e) {
    json j;
    j["mean"] = std::vector<double>(e.mean.data(), e.mean.data() + e.mean.size());
    std::vector<std::vector<double>> cov;
    for (int i = 0; i < e.cov.rows(); ++i)
        cov.emplace_back(e.cov.row(i).data(), e.cov.row(i).data() + e.cov.cols());
    j["cov"] = cov;
    return j;
}

inline json coloring_json(const TangleMachine& m, const Coloring& c) {
    json j = json::object();
    for (const auto& [arc, e] : c) j[arc] = element_to_string(m.quandle, e);
    return j;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    return out + "\n";
}

inline GaussianEstimator random_estimator(Rng& rng, int dim) {
    GaussianEstimator e;
    e.mean = random_vector(rng, dim);
    e.cov = random_spd(rng, dim);
    return e;
}

} // namespace detail

inline RunReport run(const std::vector<std::string>& argv) {
    RunReport rep;
    for (std::size_t i = 0; i < argv.size(); ++i) rep.command += (i ? " " : "") + argv[i];

    CLI::App app{"tangle machine toolkit"};
    app.require_subcommand(1);
    std::string payload;   // JSON or CSV text for stdout
    std::string schema;

    // ---- machine commands ----------------------------------------------
    std::string tm_path, tm_path_b;
    auto* cmd_check = app.add_subcommand("check", "validate a .tm file and its colours");
    cmd_check->add_option("tm", tm_path, "machine file")->required();

    std::vector<std::string> given;
    auto* cmd_color = app.add_subcommand("color", "propagate a partial colouring");
    cmd_color->add_option("tm", tm_path, "machine file")->required();
    cmd_color->add_option("--given", given, "arc=colour assignments");

    bool list_colorings = false;
    auto* cmd_enum = app.add_subcommand("enumerate", "count valid colourings");
    cmd_enum->add_option("tm", tm_path, "machine file")->required();
    cmd_enum->add_flag("--list", list_colorings, "also list colourings (within cap)");

    int kmax = 6;
    bool confusable_only = false;
    auto* cmd_cap = app.add_subcommand("cap", "colouring-count capacity profile");
    cmd_cap->add_option("tm", tm_path, "machine file")->required();
    cmd_cap->add_option("--kmax", kmax, "largest dihedral order (<= 16)");
    cmd_cap->add_flag("--confusable-only", confusable_only,
                      "count only colourings with a determined colour");

    auto* cmd_complexity = app.add_subcommand("complexity", "connect-summand count");
    cmd_complexity->add_option("tm", tm_path, "machine file")->required();

    std::string move_json, out_path;
    auto* cmd_rewrite = app.add_subcommand("rewrite", "apply local moves");
    cmd_rewrite->add_option("tm", tm_path, "machine file")->required();
    cmd_rewrite->add_option("--move", move_json, "site record or array (JSON)")->required();
    cmd_rewrite->add_option("--out", out_path, "write the rewritten machine here");

    int depth = 6;
    auto* cmd_equiv = app.add_subcommand("equiv", "bounded equivalence search");
    cmd_equiv->add_option("tm", tm_path, "first machine")->required();
    cmd_equiv->add_option("tm2", tm_path_b, "second machine")->required();
    cmd_equiv->add_option("--depth", depth, "move-sequence depth cap");

    // ---- fusion commands -------------------------------------------------
    std::string csv_path, faults_path;
    double omega = 0.5;
    std::vector<std::string> stream_pair;
    auto* cmd_fuse = app.add_subcommand("fuse", "covariance-intersect two streams");
    cmd_fuse->add_option("--csv", csv_path, "estimator stream CSV")->required();
    cmd_fuse->add_option("--omega", omega, "fusion weight in (0,1)")->required();
    cmd_fuse->add_option("--streams", stream_pair, "two stream ids (default: first two)")
        ->delimiter(',');

    int dim = 2, grid = 9;
    std::uint64_t seed = 0;
    auto* cmd_geo = app.add_subcommand("geodesic-check", "fusion-vs-geodesic verification");
    cmd_geo->add_option("--dim", dim, "state dimension");
    cmd_geo->add_option("--grid", grid, "interior weight grid size");
    cmd_geo->add_option("--seed", seed, "PRNG seed")->required();

    double weight_s = 0.5, weight_t = 0.5;
    auto* cmd_fault = app.add_subcommand("faultsim", "fault-adaptive fusion simulation");
    cmd_fault->add_option("--streams", csv_path, "estimator stream CSV (streams x,y,z)")->required();
    cmd_fault->add_option("--faults", faults_path, "fault schedule CSV")->required();
    cmd_fault->add_option("--s", weight_s, "final fusion weight");
    cmd_fault->add_option("--t", weight_t, "z-fusion weight");

    // ---- aqc commands ----------------------------------------------------
    auto* cmd_aqc = app.add_subcommand("aqc", "schedule evaluation");
    cmd_aqc->require_subcommand(1);
    double alpha = 0.5, a_param = 0.95, lambda = 0.5;
    int aqc_grid = 512, lambda_count = 25;
    std::string expr_text = "(fuse@0 PX0 PZ)";
    std::string problem = "none";
    std::string format = "csv";
    auto* cmd_gap = cmd_aqc->add_subcommand("gap", "gap profile of a schedule expression");
    cmd_gap->add_option("--expr", expr_text, "prefix expression");
    cmd_gap->add_option("--problem", problem, "generator catalog: none|entangle|twosat");
    cmd_gap->add_option("--alpha", alpha, "time deformation parameter");
    cmd_gap->add_option("--a", a_param, "entanglement problem weight a");
    cmd_gap->add_option("--lambda", lambda, "entanglement problem lambda");
    cmd_gap->add_option("--grid", aqc_grid, "grid points");
    cmd_gap->add_option("--format", format, "csv or json");

    auto* cmd_ent = cmd_aqc->add_subcommand("entangle", "computation-time sweep over lambda");
    cmd_ent->add_option("--alpha", alpha, "time deformation parameter");
    cmd_ent->add_option("--a", a_param, "weight a");
    cmd_ent->add_option("--grid", aqc_grid, "profile grid points");
    cmd_ent->add_option("--lambdas", lambda_count, "sweep size");
    cmd_ent->add_option("--format", format, "csv or json");

    auto* cmd_sat = cmd_aqc->add_subcommand("twosat", "2-SAT schedule gap curves");
    cmd_sat->add_option("--alpha", alpha, "time deformation parameter");
    cmd_sat->add_option("--grid", aqc_grid, "profile grid points");
    cmd_sat->add_option("--format", format, "csv or json");

    // ---- causal commands --------------------------------------------------
    int lags = 2;
    double ambiguity = 0.1;
    auto* cmd_detect = app.add_subcommand("detect", "detect an interaction from a panel");
    cmd_detect->add_option("--panel", csv_path, "panel CSV")->required();
    cmd_detect->add_option("--lags", lags, "lag order p")->required();
    cmd_detect->add_option("--ambiguity", ambiguity, "patient-order ambiguity threshold");

    std::string spec_path;
    auto* cmd_synth = app.add_subcommand("synth", "simulate a triangular lag model");
    cmd_synth->add_option("--spec", spec_path, "JSON spec file")->required();
    cmd_synth->add_option("--seed", seed, "PRNG seed")->required();

    std::vector<const char*> cargv;
    cargv.push_back("tangleforge");
    for (const std::string& s : argv) cargv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        rep.stdout_text = app.help();
        rep.exit_code = 0;
        return rep;
    } catch (const CLI::ParseError& e) {
        rep.stderr_text = std::string("usage error: ") + e.what() + "\n";
        rep.exit_code = 2;
        return rep;
    }

    try {
        if (*cmd_check) {
            schema = "tangleforge.check/1";
            TmDocument doc = parse_tm_file(tm_path, false);
            const ValidationReport v = validate(doc.machine);
            json j;
            j["valid"] = v.ok();
            j["violations"] = v.violations;
            std::string status = "none";
            if (!doc.colors.empty() && v.ok()) {
                if (doc.colors.size() == doc.machine.arcs.size())
                    status = check_coloring(doc.machine, doc.colors) ? "valid" : "invalid";
                else
                    status = "partial";
            } else if (!doc.colors.empty()) {
                status = "partial";
            }
            j["coloring"] = status;
            payload = j.dump() + "\n";
        } else if (*cmd_color) {
            schema = "tangleforge.color/1";
            TmDocument doc = parse_tm_file(tm_path);
            Coloring partial = doc.colors;
            for (const std::string& kv : given) {
                const std::size_t eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("--given needs arc=colour, got '" + kv + "'");
                partial[kv.substr(0, eq)] =
                    element_from_string(doc.machine.quandle, kv.substr(eq + 1));
            }
            const Coloring full = propagate(doc.machine, partial);
            json j;
            j["coloring"] = detail::coloring_json(doc.machine, full);
            payload = j.dump() + "\n";
        } else if (*cmd_enum) {
            schema = "tangleforge.enumerate/1";
            TmDocument doc = parse_tm_file(tm_path);
            const EnumerationResult res = enumerate_colorings(doc.machine, doc.machine.quandle);
            json j;
            j["count"] = res.count;
            if (list_colorings && res.listed) {
                json list = json::array();
                for (const Coloring& c : res.colorings)
                    list.push_back(detail::coloring_json(doc.machine, c));
                j["colorings"] = list;
            }
            payload = j.dump() + "\n";
        } else if (*cmd_cap) {
            schema = "tangleforge.cap/1";
            TmDocument doc = parse_tm_file(tm_path);
            const CapacityReport r = capacity(doc.machine, kmax, confusable_only);
            json caps = json::object();
            for (const auto& [k, n] : r.cap) caps[std::to_string(k)] = n;
            json j;
            j["cap"] = caps;
            j["capacity"] = r.capacity;
            j["argmax_k"] = r.argmax_k;
            payload = j.dump() + "\n";
        } else if (*cmd_complexity) {
            schema = "tangleforge.complexity/1";
            TmDocument doc = parse_tm_file(tm_path);
            if (doc.colors.empty())
                throw std::runtime_error("complexity needs colour declarations in the .tm file");
            const Coloring full = propagate(doc.machine, doc.colors);
            json j;
            j["complexity"] = complexity(doc.machine, full);
            payload = j.dump() + "\n";
        } else if (*cmd_rewrite) {
            schema = "tangleforge.rewrite/1";
            TmDocument doc = parse_tm_file(tm_path);
            const json moves = json::parse(move_json);
            TangleMachine m = doc.machine;
            std::vector<RewriteSite> sites;
            if (moves.is_array())
                for (const auto& s : moves) sites.push_back(site_from_json(s));
            else
                sites.push_back(site_from_json(moves));
            for (const RewriteSite& s : sites) m = apply_move(m, s);
            const std::string text = serialize_tm(m);
            json j;
            j["canonical_key"] = canonical_key(m);
            if (out_path.empty()) {
                j["machine_tm"] = text;
            } else {
                std::ofstream f(out_path);
                if (!f) throw std::runtime_error("cannot write '" + out_path + "'");
                f << text;
                j["written"] = out_path;
            }
            payload = j.dump() + "\n";
        } else if (*cmd_equiv) {
            schema = "tangleforge.equiv/1";
            TmDocument da = parse_tm_file(tm_path);
            TmDocument db = parse_tm_file(tm_path_b);
            const Equivalence eq = equivalent(da.machine, db.machine, depth);
            json j;
            switch (eq.verdict) {
                case Equivalence::Verdict::equivalent: j["verdict"] = "equivalent"; break;
                case Equivalence::Verdict::distinguished: j["verdict"] = "distinguished"; break;
                case Equivalence::Verdict::unknown: j["verdict"] = "unknown"; break;
            }
            if (eq.verdict == Equivalence::Verdict::equivalent) {
                json moves = json::array();
                for (const RewriteSite& s : eq.moves) moves.push_back(site_to_json(s));
                j["moves"] = moves;
            }
            if (!eq.witness.empty()) j["witness"] = eq.witness;
            payload = j.dump() + "\n";
        } else if (*cmd_fuse) {
            schema = "tangleforge.fuse/1";
            const auto streams = read_stream_csv(csv_path);
            std::vector<std::string> ids = stream_pair;
            if (ids.empty())
                for (const auto& [name, seq] : streams) {
                    ids.push_back(name);
                    if (ids.size() == 2) break;
                }
            if (ids.size() != 2) throw std::runtime_error("fuse needs exactly two stream ids");
            const auto& s1 = streams.at(ids[0]);
            const auto& s2 = streams.at(ids[1]);
            if (s1.size() != s2.size())
                throw std::runtime_error("streams have different lengths");
            json fused = json::array();
            for (std::size_t i = 0; i < s1.size(); ++i) {
                json row = detail::estimator_json(ci_fuse(s1[i], s2[i], omega));
                row["t"] = i;
                fused.push_back(row);
            }
            json j;
            j["streams"] = ids;
            j["omega"] = omega;
            j["fused"] = fused;
            payload = j.dump() + "\n";
        } else if (*cmd_geo) {
            schema = "tangleforge.geodesic-check/1";
            Rng rng(seed);
            const GaussianEstimator p = detail::random_estimator(rng, dim);
            const GaussianEstimator q = detail::random_estimator(rng, dim);
            const GeodesicReport r = verify_geodesic(p, q, grid, rng.bits());
            json pts = json::array();
            for (const auto& gp : r.grid) {
                json row;
                row["omega"] = gp.omega;
                row["fuse_vs_density"] = gp.fuse_vs_density;
                row["j_at_fused"] = gp.j_at_fused;
                row["j_cloud_min"] = gp.j_cloud_min;
                row["minimal"] = gp.minimal;
                pts.push_back(row);
            }
            json j;
            j["endpoint_low_err"] = r.endpoint_low_err;
            j["endpoint_high_err"] = r.endpoint_high_err;
            j["grid"] = pts;
            j["pass"] = r.pass;
            payload = j.dump() + "\n";
        } else if (*cmd_fault) {
            schema = "tangleforge.faultsim/1";
            const auto streams = read_stream_csv(csv_path);
            for (const char* need : {"x", "y", "z"})
                if (!streams.count(need))
                    throw std::runtime_error(std::string("faultsim needs stream '") + need + "'");
            const auto steps = fault_schedule_sim(streams.at("x"), streams.at("y"),
                                                  streams.at("z"), read_fault_csv(faults_path),
                                                  weight_s, weight_t);
            json arr = json::array();
            for (const FaultSimStep& s : steps) {
                json row;
                row["t"] = s.t;
                row["code"] = to_string(s.code);
                row["config"] = s.config;
                row["faulty_upstream"] = s.faulty_upstream;
                row["clean"] = s.clean;
                row["intermediate"] = detail::estimator_json(s.protected_intermediate);
                row["fused"] = detail::estimator_json(s.fused);
                arr.push_back(row);
            }
            json j;
            j["steps"] = arr;
            payload = j.dump() + "\n";
        } else if (*cmd_gap) {
            schema = "tangleforge.aqc.gap/1";
            OperatorCatalog ops;
            FrameClock clock{alpha, {1.0, 1.0}};
            if (problem == "none") {
                ops["PX0"] = projector_x(0, 1, 0);
                ops["PX1"] = projector_x(1, 1, 0);
                ops["PZ"] = projector_z(1, 0);
            } else if (problem == "entangle") {
                EntangleProblem p = build_entanglement_problem(a_param, lambda, alpha);
                ops = p.ops;
                clock = p.clock;
            } else if (problem == "twosat") {
                TwoSatProblem p = build_twosat_problem(alpha);
                ops = p.ops;
                clock = p.clock;
            } else {
                throw std::runtime_error("unknown --problem '" + problem + "'");
            }
            const GapProfile prof =
                gap_profile(ScheduleExpr::parse(expr_text), clock, ops, aqc_grid);
            if (format == "json") {
                json j;
                j["g_min"] = prof.g_min;
                j["t_at_gmin"] = prof.t_at_gmin;
                j["time"] = prof.computation_time;
                payload = j.dump() + "\n";
            } else {
                payload = detail::csv_line({"t", "ground", "gap", "degeneracy"});
                for (std::size_t i = 0; i < prof.t.size(); ++i)
                    payload += detail::csv_line({format_double(prof.t[i]),
                                                 format_double(prof.ground[i]),
                                                 format_double(prof.gap[i]),
                                                 std::to_string(prof.degeneracy[i])});
            }
        } else if (*cmd_ent) {
            schema = "tangleforge.aqc.entangle/1";
            json rows = json::array();
            payload = detail::csv_line(
                {"lambda", "time_standard", "time_o1", "time_o1prime", "time_nodeform"});
            std::string csv_text = payload;
            for (int i = 0; i < lambda_count; ++i) {
                const double lam = 0.05 + 0.9 * i / (lambda_count - 1);
                const EntangleProblem p = build_entanglement_problem(a_param, lam, alpha);
                const double ts =
                    gap_profile(p.standard, p.clock, p.ops, aqc_grid).computation_time;
                const double t1 = gap_profile(p.o1, p.clock, p.ops, aqc_grid).computation_time;
                const double t1p =
                    gap_profile(p.o1prime, p.clock, p.ops, aqc_grid).computation_time;
                const double tnd =
                    gap_profile(p.no_deformation, p.clock, p.ops, aqc_grid).computation_time;
                csv_text += detail::csv_line({format_double(lam), format_double(ts),
                                              format_double(t1), format_double(t1p),
                                              format_double(tnd)});
                json row;
                row["lambda"] = lam;
                row["time_standard"] = ts;
                row["time_o1"] = t1;
                row["time_o1prime"] = t1p;
                row["time_nodeform"] = tnd;
                rows.push_back(row);
            }
            payload = format == "json" ? json{{"rows", rows}}.dump() + "\n" : csv_text;
        } else if (*cmd_sat) {
            schema = "tangleforge.aqc.twosat/1";
            const TwoSatProblem p = build_twosat_problem(alpha);
            struct Entry {
                const char* name;
                const ScheduleExpr* expr;
            };
            const std::vector<Entry> entries = {
                {"std_h1", &p.standard_h1}, {"std_g", &p.standard_g}, {"o1", &p.o1},
                {"o1prime", &p.o1prime},    {"o1_g", &p.o1_g},        {"o1prime_g", &p.o1prime_g}};
            std::vector<GapProfile> profs;
            for (const Entry& e : entries)
                profs.push_back(gap_profile(*e.expr, p.clock, p.ops, aqc_grid));
            if (format == "json") {
                json j = json::object();
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    json row;
                    row["g_min"] = profs[i].g_min;
                    row["time"] = profs[i].computation_time;
                    j[entries[i].name] = row;
                }
                payload = j.dump() + "\n";
            } else {
                std::vector<std::string> head = {"t"};
                for (const Entry& e : entries) head.push_back(std::string("g_") + e.name);
                payload = detail::csv_line(head);
                for (std::size_t r = 0; r < profs[0].t.size(); ++r) {
                    std::vector<std::string> cells = {format_double(profs[0].t[r])};
                    for (const GapProfile& prof : profs)
                        cells.push_back(format_double(prof.gap[r]));
                    payload += detail::csv_line(cells);
                }
            }
        } else if (*cmd_detect) {
            schema = "tangleforge.detect/1";
            const TimeSeriesPanel panel = read_panel_csv(csv_path);
            const InteractionHypothesis hyp = detect_interaction(panel, lags, ambiguity);
            json j;
            j["agent"] = hyp.agent;
            j["input"] = hyp.input;
            j["output"] = hyp.output;
            j["ambiguous_order"] = hyp.ambiguous_order;
            json conf = json::object();
            for (const auto& [edge, c] : hyp.confidence) conf[edge] = c;
            j["confidences"] = conf;
            payload = j.dump() + "\n";
        } else if (*cmd_synth) {
            schema = "tangleforge.synth/1";
            std::ifstream f(spec_path);
            if (!f) throw std::runtime_error("cannot open '" + spec_path + "'");
            const json spec_json = json::parse(f);
            SynthSpec spec;
            if (spec_json.contains("names"))
                spec.names = spec_json.at("names").get<std::vector<std::string>>();
            if (spec_json.contains("p")) spec.p = spec_json.at("p").get<int>();
            if (spec_json.contains("T")) spec.length = spec_json.at("T").get<int>();
            if (spec_json.contains("burn_in")) spec.burn_in = spec_json.at("burn_in").get<int>();
            if (spec_json.contains("blocks"))
                for (const auto& [key, val] : spec_json.at("blocks").items()) {
                    const auto v = val.get<std::vector<double>>();
                    Eigen::VectorXd b(v.size());
                    for (std::size_t i = 0; i < v.size(); ++i) b[static_cast<int>(i)] = v[i];
                    spec.blocks[key] = b;
                }
            if (spec_json.contains("noise"))
                for (const auto& [key, val] : spec_json.at("noise").items())
                    spec.noise[key] = val.get<double>();
            payload = write_panel_csv(synth_panel(spec, seed));
        }
    } catch (const std::exception& e) {
        rep.stderr_text = std::string("error: ") + e.what() + "\n";
        rep.exit_code = 1;
        return rep;
    }

    rep.schema = schema;
    rep.stdout_text = payload;
    rep.stderr_text = "# schema: " + schema + "\n# command: " + rep.command + "\n";
    return rep;
}

} // namespace tangleforge::cli
