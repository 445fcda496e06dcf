// Command-line front end: excite -> identify -> reduce -> validate ->
// control -> bench, over the pH neutralization benchmark.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "esnctl/experiment.hpp"
#include "esnctl/text_io.hpp"

namespace fs = std::filesystem;
using namespace esnctl;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = ExperimentConfig::load(args.config_path);
    if (args.seed) cfg.apply_seed(*args.seed);
    return cfg;
}

std::vector<std::string> config_header(const ExperimentConfig& cfg) {
    // single-line copy of the resolved configuration for reproducibility
    std::string flat = cfg.to_json_string();
    std::string one_line;
    for (char c : flat)
        if (c != '\n') one_line += c;
    return {"# esnctl run", "# config: " + one_line};
}

void append_table_rows(const std::string& path, const std::vector<FittingRow>& rows) {
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (fresh) out << "algorithm          n     fitting\n";
    char line[96];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-16s %5d  %9.2f%%\n", r.algorithm.c_str(),
                      r.n, r.fitting);
        out << line;
    }
}

int cmd_excite(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    const ExciteResult r = run_excite(cfg);
    const auto header = config_header(cfg);
    save_dataset(r.train, args.out_dir + "/train.csv", header);
    save_dataset(r.val, args.out_dir + "/val.csv", header);
    cfg.save(args.out_dir + "/config.resolved.json");
    std::printf("wrote %s/train.csv (%d samples) and %s/val.csv (%d samples)\n",
                args.out_dir.c_str(), r.train.size(), args.out_dir.c_str(), r.val.size());
    std::printf("u range [%g, %g], y range [%g, %g]\n",
                *std::min_element(r.train.u.begin(), r.train.u.end()),
                *std::max_element(r.train.u.begin(), r.train.u.end()),
                *std::min_element(r.train.y_sys.begin(), r.train.y_sys.end()),
                *std::max_element(r.train.y_sys.begin(), r.train.y_sys.end()));
    return 0;
}

int cmd_identify(const CommonArgs& args, const std::string& variant,
                 std::string train_path, std::string val_path) {
    const ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    if (train_path.empty()) train_path = args.out_dir + "/train.csv";
    if (val_path.empty()) val_path = args.out_dir + "/val.csv";

    const Dataset train = load_dataset(train_path);
    const Dataset val = load_dataset(val_path);
    const IdentifyResult res = run_identify(cfg, train, val);

    std::printf("reservoir n=%d  ||W_x||=%.6f  rho=%.6f  delta_gas=%s  alpha=%.6f\n",
                cfg.reservoir.n, res.certificate.operator_norm,
                res.certificate.spectral_radius, res.certificate.delta_gas ? "yes" : "no",
                res.certificate.alpha);
    std::printf("washout k0=%d  lambda=%.6g\n", res.k0, res.lambda_selected);

    std::vector<FittingRow> rows;
    const auto pick = [&](const FittingRow& row, const EsnModel& model,
                          const std::string& file) {
        rows.push_back(row);
        save_model(model, args.out_dir + "/" + file);
    };
    if (variant == "1" || variant == "all")
        pick(res.rows[0], res.model_ls, "model_1.esn");
    if (variant == "2a" || variant == "all")
        pick(res.rows[1], res.model_lasso, "model_2a.esn");
    if (variant == "2b" || variant == "all")
        pick(res.rows[2], res.model_pruned, "model_2b.esn");
    if (variant == "2full" || variant == "all")
        pick(res.rows[3], res.model_reduced, "model_2full.esn");

    append_table_rows(args.out_dir + "/fitting_table.txt", rows);
    if (variant == "2full" || variant == "all")
        write_file(args.out_dir + "/reduction_report.txt", res.report.to_text());
    std::fputs(format_fitting_table(rows).c_str(), stdout);
    return 0;
}

int cmd_reduce(const CommonArgs& args, const std::string& model_path,
               std::string train_path, std::string val_path) {
    const ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    if (train_path.empty()) train_path = args.out_dir + "/train.csv";
    if (val_path.empty()) val_path = args.out_dir + "/val.csv";

    const LoadedModel loaded = load_model(model_path);
    const EsnModel model = loaded.require_model("reduce");

    Dataset train = load_dataset(train_path);
    Dataset val = load_dataset(val_path);
    const StabilityCertificate cert = certify(model.reservoir);
    const int k0 = cert.delta_gas && cert.alpha > 0.0
                       ? static_cast<int>(std::ceil(std::log(1e-8) / std::log(cert.alpha)))
                       : cfg.training.washout_fixed;
    Dataset train_s = train.scaled(model.u_scale, model.y_scale);
    Dataset val_s = val.scaled(model.u_scale, model.y_scale);
    train_s.k0 = k0;
    val_s.k0 = k0;

    const ReductionResult red =
        reduce_and_retrain(model.reservoir, model.readout, train_s, val_s);
    EsnModel reduced;
    reduced.reservoir = red.reservoir;
    reduced.readout = red.readout;
    reduced.u_scale = model.u_scale;
    reduced.y_scale = model.y_scale;
    save_model(reduced, args.out_dir + "/model_reduced.esn");
    write_file(args.out_dir + "/reduction_report.txt", red.report.to_text());
    std::fputs(red.report.to_text().c_str(), stdout);
    return 0;
}

int cmd_validate(const CommonArgs& args, const std::string& model_path,
                 const std::string& data_path) {
    const ExperimentConfig cfg = resolve_config(args);
    const LoadedModel loaded = load_model(model_path);
    const EsnModel model = loaded.require_model("validate");
    Dataset data = load_dataset(data_path);

    const StabilityCertificate cert = certify(model.reservoir);
    const int k0 = cert.delta_gas && cert.alpha > 0.0
                       ? static_cast<int>(std::ceil(std::log(1e-8) / std::log(cert.alpha)))
                       : cfg.training.washout_fixed;
    Dataset data_s = data.scaled(model.u_scale, model.y_scale);
    data_s.k0 = k0;
    const double fit = validation_fitting(model.reservoir, model.readout, data_s);
    std::printf("n=%d  fitting %.2f%% on %s (washout %d)\n", model.n_states(), fit,
                data_path.c_str(), k0);
    return 0;
}

int cmd_control(const CommonArgs& args, const std::string& model_path) {
    const ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    const EsnModel model = load_model(model_path).require_model("control");

    const ScenarioResult run = run_closed_loop(model, cfg);
    write_log_csv(run, args.out_dir + "/control_log.csv", config_header(cfg));
    const auto segs = summarize_segments(run, cfg);
    const std::string summary = format_summary(segs, run);
    write_file(args.out_dir + "/control_summary.txt", summary);
    std::fputs(summary.c_str(), stdout);
    return 0;
}

int cmd_bench(const CommonArgs& args, const std::string& model_path,
              const std::string& reduced_path) {
    const ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    const EsnModel full = load_model(model_path).require_model("bench");
    const EsnModel reduced = load_model(reduced_path).require_model("bench");

    const BenchResult b = run_bench(full, reduced, cfg);
    const std::string text = format_bench(b);
    write_file(args.out_dir + "/bench.txt", text);
    std::fputs(text.c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echo state network identification, reduction and predictive "
                 "control toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_path, "experiment config (JSON)");
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed, "master seed override");

    std::string variant = "all";
    std::string model_path, reduced_path, train_path, val_path, data_path;

    auto* excite = app.add_subcommand("excite", "generate excitation datasets");
    auto* identify = app.add_subcommand("identify", "train and compare model variants");
    identify->add_option("--variant", variant, "1|2a|2b|2full|all");
    identify->add_option("--train", train_path, "training dataset CSV");
    identify->add_option("--val", val_path, "validation dataset CSV");
    auto* reduce = app.add_subcommand("reduce", "shrink a trained model and retrain");
    reduce->add_option("--model", model_path, "trained model file")->required();
    reduce->add_option("--train", train_path, "training dataset CSV");
    reduce->add_option("--val", val_path, "validation dataset CSV");
    auto* validate = app.add_subcommand("validate", "fitting of a model on a dataset");
    validate->add_option("--model", model_path, "model file")->required();
    validate->add_option("--data", data_path, "dataset CSV")->required();
    auto* control = app.add_subcommand("control", "closed-loop tracking scenario");
    control->add_option("--model", model_path, "model file")->required();
    auto* bench = app.add_subcommand("bench", "solver timing, full vs reduced");
    bench->add_option("--model", model_path, "full model file")->required();
    bench->add_option("--reduced", reduced_path, "reduced model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (excite->parsed()) return cmd_excite(common);
        if (identify->parsed()) return cmd_identify(common, variant, train_path, val_path);
        if (reduce->parsed()) return cmd_reduce(common, model_path, train_path, val_path);
        if (validate->parsed()) return cmd_validate(common, model_path, data_path);
        if (control->parsed()) return cmd_control(common, model_path);
        if (bench->parsed()) return cmd_bench(common, model_path, reduced_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
