#include "commands.hpp"

#include "eps/error.hpp"
#include "eps/evaluator.hpp"
#include "eps/model_io.hpp"
#include "eps/stream_runtime.hpp"
#include "eps/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

namespace eps::cli {

using Json = nlohmann::ordered_json;

namespace {

std::string session_file(int i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "session_%04d.jsonl", i);
    return buf;
}

Json selection_json(const SelectionRecord& s)
{
    Json j;
    j["t_ms"] = s.t_ms;
    j["target_id"] = s.target_id;
    j["label"] = std::string(to_string(s.label));
    j["round"] = s.round;
    j["response_time_s"] = s.response_time_s;
    j["executed"] = s.executed;
    j["points"] = s.points;
    if (s.verdict)
        j["verdict"] = std::string(to_string(*s.verdict));
    if (s.err)
        j["err"] = *s.err;
    return j;
}

Json session_json(const std::string& file, std::uint64_t seed, const SimSession& s)
{
    Json j;
    j["file"] = file;
    j["seed"] = seed;
    j["samples"] = s.recording.size();
    j["selections"] = s.selections.size();
    j["correct"] = s.labelled(Label::Correct);
    j["incorrect"] = s.labelled(Label::Incorrect);
    j["executed_incorrect"] = s.executed_incorrect();
    j["points"] = s.total_points();
    Json sel = Json::array();
    for (const auto& r : s.selections)
        sel.push_back(selection_json(r));
    j["selection_log"] = std::move(sel);
    return j;
}

Json comparison_json(const MethodComparison& c)
{
    Json j;
    j["method"] = std::string(to_string(c.method));
    j["sessions"] = c.seeds.size();
    j["median_incorrect_without"] = c.median_incorrect_without;
    j["median_incorrect_with"] = c.median_incorrect_with;
    j["median_points_without"] = c.median_points_without;
    j["median_points_with"] = c.median_points_with;
    j["incorrect_reduction"] = c.incorrect_reduction ? Json(*c.incorrect_reduction) : Json(nullptr);
    j["seeds"] = c.seeds;
    j["incorrect_without"] = c.incorrect_without;
    j["incorrect_with"] = c.incorrect_with;
    j["points_without"] = c.points_without;
    j["points_with"] = c.points_with;
    j["incorrect_delta"] = c.incorrect_delta;
    j["points_delta"] = c.points_delta;
    return j;
}

std::shared_ptr<const EpsModel> load_shared(const fs::path& p)
{
    return std::make_shared<const EpsModel>(load_model(p));
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(ErrorKind::Io, "cannot create directory " + dir.string());
}

void check_usage(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(ErrorKind::Usage, what);
}

std::vector<CvCandidate> read_grid(const fs::path& path)
{
    Json grid;
    try {
        grid = Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, "grid file: " + std::string(e.what()));
    }
    if (!grid.is_array() || grid.empty())
        throw Error(ErrorKind::InvalidInput, "grid file must be a non-empty JSON array of candidates");
    std::vector<CvCandidate> out;
    for (const auto& g : grid) {
        CvCandidate c;
        c.name = g.value("name", "candidate_" + std::to_string(out.size()));
        c.config.epochs = g.value("epochs", c.config.epochs);
        c.config.batch_size = g.value("batch_size", c.config.batch_size);
        c.config.learning_rate = g.value("learning_rate", c.config.learning_rate);
        c.config.seed = g.value("seed", c.config.seed);
        c.config.standardize = g.value("standardize", c.config.standardize);
        c.config.shuffle = g.value("shuffle", c.config.shuffle);
        c.config.validate();
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::vector<NamedRecording> load_dataset(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw Error(ErrorKind::Io, "data directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<NamedRecording> out;
    for (const auto& f : files)
        out.push_back({f.stem().string(), load_recording(f)});
    return out;
}

std::vector<VelocityWindow> dataset_windows(const std::vector<NamedRecording>& data, std::optional<Method> method,
                                            std::optional<Label> only)
{
    std::vector<VelocityWindow> out;
    for (const auto& [name, rec] : data) {
        for (const auto& e : rec.selections) {
            if (!e.label || (method && e.method != *method) || (only && *e.label != *only))
                continue;
            const auto end = window_end_index(rec.samples, e.t_ms);
            if (!end)
                continue;
            VelocityWindow w = window_ending_at(rec.samples, *end, e.t_ms, e.method);
            w.label = e.label;
            out.push_back(w);
        }
    }
    return out;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& log)
{
    check_usage(o.sessions >= 1, "--sessions must be >= 1");
    check_usage(o.rounds >= 1, "--rounds must be >= 1");
    check_usage(o.midas_rate >= 0.0 && o.midas_rate <= 1.0, "--midas-rate must be in [0, 1]");
    check_usage(!o.out.empty(), "--out is required");

    std::shared_ptr<const EpsModel> model;
    if (o.eps_model) {
        model = load_shared(*o.eps_model);
        check_usage(model->method == o.method, "model method " + std::string(to_string(model->method)) +
                                                   " does not match --method " + std::string(to_string(o.method)));
    }
    ensure_dir(o.out);
    if (model)
        ensure_dir(o.out / "with_eps");

    const SceneLayout layout = SceneLayout::standard();
    Json sessions = Json::array(), eps_sessions = Json::array();
    std::vector<SessionOutcome> without, with;
    for (int i = 0; i < o.sessions; ++i) {
        SimConfig cfg;
        cfg.seed = mix_seed(o.seed, static_cast<std::uint64_t>(i));
        cfg.method = o.method;
        cfg.rounds = o.rounds;
        cfg.midas_rate = o.midas_rate;
        const std::string file = session_file(i);

        const SimSession plain = simulate_session(cfg, layout);
        save_recording(recording_from_session(plain), o.out / file);
        sessions.push_back(session_json(file, cfg.seed, plain));
        without.push_back({cfg.seed, o.method, plain.executed_incorrect(), plain.total_points()});
        log << file << ": " << plain.selections.size() << " selections, " << plain.labelled(Label::Incorrect)
            << " incorrect, " << plain.total_points() << " points\n";

        if (model) {
            const SimSession guarded = simulate_session(cfg, layout, EpsHook{model_judge(model)});
            save_recording(recording_from_session(guarded), o.out / "with_eps" / file);
            eps_sessions.push_back(session_json(file, cfg.seed, guarded));
            with.push_back({cfg.seed, o.method, guarded.executed_incorrect(), guarded.total_points()});
            log << "  with EPS: " << guarded.executed_incorrect() << " executed incorrect, " << guarded.total_points()
                << " points\n";
        }
    }

    auto manifest = [&](const Json& list, bool eps) {
        Json m;
        m["method"] = std::string(to_string(o.method));
        m["seed"] = o.seed;
        m["rounds"] = o.rounds;
        m["midas_rate"] = o.midas_rate;
        m["eps"] = eps;
        m["sessions"] = list;
        return m.dump(2) + "\n";
    };
    write_text_atomic(o.out / "manifest.json", manifest(sessions, false));
    if (model) {
        write_text_atomic(o.out / "with_eps" / "manifest.json", manifest(eps_sessions, true));
        Json cmp = Json::array();
        for (const auto& c : performance_comparison(without, with)) {
            cmp.push_back(comparison_json(c));
            log << to_string(c.method) << ": median incorrect " << c.median_incorrect_without << " -> "
                << c.median_incorrect_with << ", median points " << c.median_points_without << " -> "
                << c.median_points_with << "\n";
        }
        write_text_atomic(o.out / "comparison.json", cmp.dump(2) + "\n");
    }
    return 0;
}

int cmd_train(const TrainOptions& o, std::ostream& log)
{
    const auto data = load_dataset(o.data);
    const auto windows = dataset_windows(data, o.method, Label::Correct);
    if (windows.empty())
        throw Error(ErrorKind::InvalidInput, "no correct " + std::string(to_string(o.method)) + " selections in " +
                                                 o.data.string());
    ArchConfig arch = ArchConfig::reference();
    arch.padding = o.padding;
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.seed = o.seed;
    cfg.standardize = o.standardize;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Usage, e.what());
    }

    const int every = std::max(1, o.epochs / 10);
    const auto built = build_model(windows, o.method, arch, cfg, o.percentile, PercentileMethod::Linear,
                                   [&](int epoch, double loss) {
                                       if ((epoch + 1) % every == 0)
                                           log << "epoch " << epoch + 1 << " loss " << loss << "\n";
                                   });
    save_model(built.model, o.out);

    Json r;
    r["method"] = std::string(to_string(o.method));
    r["windows"] = windows.size();
    r["data_fingerprint"] = built.model.provenance.data_fingerprint;
    r["config"] = {{"epochs", cfg.epochs},           {"batch_size", cfg.batch_size},
                   {"learning_rate", cfg.learning_rate}, {"adam_beta1", cfg.adam_beta1},
                   {"adam_beta2", cfg.adam_beta2},   {"adam_epsilon", cfg.adam_epsilon},
                   {"seed", cfg.seed},               {"shuffle", cfg.shuffle},
                   {"standardize", cfg.standardize}, {"padding", std::string(to_string(arch.padding))}};
    r["config_digest"] = cfg.digest();
    r["untrained"] = cfg.epochs == 0;
    r["steps"] = built.report.steps;
    r["initial_loss"] = built.report.initial_loss;
    r["final_loss"] = built.report.final_loss;
    r["percentile"] = o.percentile;
    r["threshold"] = built.model.threshold;
    r["epoch_losses"] = built.report.epoch_losses;
    const fs::path report = o.report ? *o.report : fs::path(o.out.string() + ".report.json");
    write_text_atomic(report, r.dump(2) + "\n");

    log << "trained on " << windows.size() << " windows in " << built.report.duration_s << " s; loss "
        << built.report.initial_loss << " -> " << built.report.final_loss << "; threshold " << built.model.threshold
        << (cfg.epochs == 0 ? " (untrained)" : "") << "\n";
    return 0;
}

int cmd_eval(const EvalOptions& o, std::ostream& log)
{
    std::shared_ptr<const EpsModel> model;
    if (!o.oracle)
        model = load_shared(o.model);
    const auto data = load_dataset(o.data);
    std::vector<DecisionRecord> records;
    for (const auto& [name, rec] : data) {
        for (const auto& e : rec.selections) {
            if (!e.label)
                continue;
            DecisionRecord d;
            d.session = name;
            d.method = e.method;
            d.t_ms = e.t_ms;
            d.label = e.label;
            if (o.oracle) {
                d.verdict = *e.label == Label::Correct ? Verdict::Correct : Verdict::Incorrect;
            } else {
                const Decision dec = detect(*model, rec.samples, e.t_ms, e.method);
                d.verdict = dec.verdict;
                d.err = dec.reconstruction_error;
                d.threshold = dec.threshold_used;
            }
            records.push_back(d);
        }
    }
    if (records.empty())
        throw Error(ErrorKind::InvalidInput, "no labelled selections in " + o.data.string());

    auto rows = per_session_report(records, o.policy);
    const auto totals = per_method_report(records, o.policy);
    log << report_table(totals);
    rows.insert(rows.end(), totals.begin(), totals.end());
    const fs::path csv = o.csv ? *o.csv : o.data / "eval.csv";
    write_text_atomic(csv, report_csv(rows));
    return 0;
}

int cmd_replay(const ReplayOptions& o, std::ostream& log)
{
    const auto model = load_shared(o.model);
    const Recording rec = load_recording(o.recording);
    const ReplayResult result = replay(rec, model);
    const fs::path out = o.out ? *o.out : fs::path(o.recording.string() + ".decisions.jsonl");
    write_text_atomic(out, serialize_decision_log(result.log, !o.omit_latency));
    Json summary;
    summary["selections"] = rec.selections.size();
    summary["decisions"] = result.log.size();
    summary["p50_us"] = result.p50_us;
    summary["p99_us"] = result.p99_us;
    log << summary.dump() << "\n";
    return 0;
}

int cmd_crossval(const CrossvalOptions& o, std::ostream& log)
{
    const auto data = load_dataset(o.data);
    const auto windows = dataset_windows(data, o.method, Label::Correct);
    if (o.folds < 2)
        throw Error(ErrorKind::Usage, "--folds must be >= 2");
    if (o.folds > windows.size())
        throw Error(ErrorKind::InvalidInput, "--folds " + std::to_string(o.folds) + " exceeds the " +
                                                 std::to_string(windows.size()) + " available windows");
    std::vector<CvCandidate> candidates = o.grid ? read_grid(*o.grid) : std::vector<CvCandidate>{{"reference", {}}};
    const CvReport rep = cross_validate(windows, o.folds, candidates, ArchConfig::reference(), o.seed);

    std::ostringstream csv;
    csv << "candidate,mean,sd";
    for (std::size_t f = 0; f < o.folds; ++f)
        csv << ",fold_" << f;
    csv << ",best\n";
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        const auto& r = rep.results[i];
        const bool best = i == rep.best;
        log << (best ? "* " : "  ") << r.name << "  " << r.mean << " +- " << r.sd << "\n";
        csv << r.name;
        char buf[64];
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.mean, r.sd);
        csv << buf;
        for (double l : r.fold_losses) {
            std::snprintf(buf, sizeof buf, ",%.17g", l);
            csv << buf;
        }
        csv << ',' << (best ? 1 : 0) << '\n';
    }
    if (o.out)
        write_text_atomic(*o.out, csv.str());
    return 0;
}

int cmd_profile(const ProfileOptions& o, std::ostream& log)
{
    const auto data = load_dataset(o.data);
    std::ostringstream csv;
    csv << "method,index,p25,median,p75\n";
    std::size_t groups = 0;
    for (Method m : {Method::DwellTime, Method::GazeAndHead, Method::Nod}) {
        const auto windows = dataset_windows(data, m, o.label);
        if (windows.empty())
            continue;
        ++groups;
        for (const auto& row : velocity_profile(windows)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g\n", std::string(to_string(m)).c_str(), row.index,
                          row.p25, row.median, row.p75);
            csv << buf;
        }
        log << to_string(m) << ": " << windows.size() << " windows\n";
    }
    if (groups == 0)
        throw Error(ErrorKind::InvalidInput, "no windows in " + o.data.string());
    write_text_atomic(o.out, csv.str());
    return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Post-selection error prevention for gaze interaction"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string method = "dwell_time";
    std::string label = "correct";
    std::string padding = "symmetric";
    std::string eps_model;
    std::string policy = "fail-open";
    std::string grid, out_path, report_path, csv_path;

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Generate synthetic sessions");
    s->add_option("--method", method, "dwell_time | gaze_and_head | nod");
    s->add_option("--sessions", sim.sessions);
    s->add_option("--rounds", sim.rounds);
    s->add_option("--midas-rate", sim.midas_rate);
    s->add_option("--seed", sim.seed);
    s->add_option("--eps", eps_model, "Model for the paired with-EPS arm");
    s->add_option("--out", sim.out)->required();

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train and calibrate a model");
    t->add_option("--method", method);
    t->add_option("--data", tr.data)->required();
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch", tr.batch);
    t->add_option("--lr", tr.lr);
    t->add_option("--seed", tr.seed);
    t->add_option("--percentile", tr.percentile);
    t->add_flag("--standardize", tr.standardize);
    t->add_option("--padding", padding, "symmetric | causal");
    t->add_option("--out", tr.out);
    t->add_option("--report", report_path);

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Accuracy report on labelled recordings");
    e->add_option("--model", ev.model);
    e->add_option("--data", ev.data)->required();
    e->add_option("--csv", csv_path);
    e->add_flag("--oracle", ev.oracle, "Use ground truth instead of a model");
    e->add_option("--policy", policy, "fail-open | fail-closed");

    ReplayOptions rp;
    auto* r = app.add_subcommand("replay", "Stream a recording through the runtime");
    r->add_option("--model", rp.model)->required();
    r->add_option("--recording", rp.recording)->required();
    r->add_option("--out", out_path);
    r->add_flag("--omit-latency", rp.omit_latency);

    CrossvalOptions cv;
    auto* c = app.add_subcommand("crossval", "K-fold validation loss per candidate");
    c->add_option("--method", method);
    c->add_option("--data", cv.data)->required();
    c->add_option("--folds", cv.folds);
    c->add_option("--grid", grid);
    c->add_option("--seed", cv.seed);
    c->add_option("--out", out_path);

    ProfileOptions pr;
    auto* p = app.add_subcommand("profile", "Velocity quartiles per time index");
    p->add_option("--data", pr.data)->required();
    p->add_option("--out", pr.out);
    p->add_option("--label", label, "correct | incorrect | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? 0 : exit_code_for(ErrorKind::Usage);
    }

    try {
        const Method m = parse_method(method);
        if (*s) {
            sim.method = m;
            if (!eps_model.empty())
                sim.eps_model = eps_model;
            return cmd_simulate(sim, out);
        }
        if (*t) {
            tr.method = m;
            tr.padding = parse_padding(padding);
            if (!report_path.empty())
                tr.report = report_path;
            return cmd_train(tr, out);
        }
        if (*e) {
            check_usage(ev.oracle || !ev.model.empty(), "--model is required unless --oracle is given");
            if (policy == "fail-closed")
                ev.policy = UnclassifiablePolicy::FailClosed;
            else
                check_usage(policy == "fail-open", "--policy must be fail-open or fail-closed");
            if (!csv_path.empty())
                ev.csv = csv_path;
            return cmd_eval(ev, out);
        }
        if (*r) {
            if (!out_path.empty())
                rp.out = out_path;
            return cmd_replay(rp, out);
        }
        if (*c) {
            cv.method = m;
            if (!grid.empty())
                cv.grid = grid;
            if (!out_path.empty())
                cv.out = out_path;
            return cmd_crossval(cv, out);
        }
        if (*p) {
            if (label == "all")
                pr.label.reset();
            else
                pr.label = parse_label(label);
            return cmd_profile(pr, out);
        }
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_code_for(ex.kind());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    }
    return exit_code_for(ErrorKind::Usage);
}

}  // namespace eps::cli
