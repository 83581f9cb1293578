#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "halfface/axis.hpp"
#include "halfface/eigen.hpp"
#include "halfface/harness.hpp"
#include "halfface/image_io.hpp"
#include "halfface/quality.hpp"
#include "halfface/stitch.hpp"

using namespace halfface;

namespace {

SymmetryAxis resolve_axis(const GrayImage& img, const std::string& cascade_path,
                          std::optional<double> explicit_column) {
    if (explicit_column)
        return SymmetryAxis{*explicit_column, AxisMethod::mirror_search, 1.0};
    if (!cascade_path.empty()) {
        const CascadeModel cascade = load_cascade(cascade_path);
        if (const auto bb = detect_nose(img, cascade))
            return axis_from_nose(*bb);
        std::cerr << "halfface: cascade found no nose, falling back to mirror search\n";
    }
    return mirror_search_axis(img);
}

int run_stitch(const std::string& input, const std::string& output, const std::string& cascade,
               std::optional<double> axis_col, const std::string& reference,
               const std::string& report_path, const StitchParams& params) {
    const GrayImage img = load_image(input);
    const SymmetryAxis axis = resolve_axis(img, cascade, axis_col);
    const StitchOutcome outcome = stitch_face(img, axis, params);
    save_image(outcome.image, output);

    nlohmann::json report = {
        {"axis_column", outcome.axis.column},
        {"axis_method", outcome.axis.method == AxisMethod::cascade ? "cascade" : "mirror_search"},
        {"offset", {{"i", outcome.offset.i}, {"j", outcome.offset.j}}},
        {"peak_ncc", outcome.peak_ncc},
        {"mirrored_from_right", outcome.mirrored_from_right},
        {"output_width", outcome.image.width},
        {"output_height", outcome.image.height},
    };
    if (!reference.empty()) {
        const GrayImage ref = load_image(reference);
        GrayImage fitted = outcome.image;
        if (!fitted.same_geometry(ref)) {
            GrayImage resized(ref.width, ref.height);
            for (int y = 0; y < ref.height; ++y)
                for (int x = 0; x < ref.width; ++x)
                    resized.at(x, y) = fitted.at(std::min(x, fitted.width - 1),
                                                 std::min(y, fitted.height - 1));
            fitted = std::move(resized);
        }
        report["mse"] = mse(ref, fitted);
        report["cr"] = cr(ref, fitted);
    }
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out)
            throw Error(ErrorCode::io_failure, "cannot write " + report_path);
        out << report.dump(2) << "\n";
    } else {
        std::cout << report.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Half-face completion and Eigenfaces recognition"};
    app.require_subcommand(1);

    // stitch
    auto* stitch_cmd = app.add_subcommand("stitch", "Complete a partial face by mirror stitching");
    std::string stitch_input, stitch_output, stitch_cascade, stitch_reference, stitch_report;
    std::optional<double> stitch_axis;
    StitchParams params;
    stitch_cmd->add_option("--input", stitch_input, "input image (PGM/PNG)")->required();
    stitch_cmd->add_option("--output", stitch_output, "output image")->required();
    stitch_cmd->add_option("--cascade", stitch_cascade, "Haar cascade XML for nose detection");
    stitch_cmd->add_option("--axis", stitch_axis, "explicit symmetry axis column");
    stitch_cmd->add_option("--radius", params.search_radius, "offset search radius");
    stitch_cmd->add_option("--band", params.band_width, "seam band width");
    stitch_cmd->add_option("--levels", params.blend_levels, "blend pyramid levels");
    stitch_cmd->add_option("--reference", stitch_reference, "reference image for MSE/CR");
    stitch_cmd->add_option("--report", stitch_report, "write the JSON report here");

    // quality
    auto* quality_cmd = app.add_subcommand("quality", "MSE and correlation between two images");
    std::string q_original, q_stitched;
    bool q_json = false;
    quality_cmd->add_option("--original", q_original)->required();
    quality_cmd->add_option("--stitched", q_stitched)->required();
    quality_cmd->add_flag("--json", q_json, "emit a JSON object");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate and summarize a corpus directory");
    std::string ingest_dir;
    ingest_cmd->add_option("dir", ingest_dir, "corpus root")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train an Eigenfaces model");
    std::string train_corpus, train_out;
    size_t train_k = 0;
    bool train_no_normalize = false;
    train_cmd->add_option("--corpus", train_corpus)->required();
    train_cmd->add_option("--k", train_k, "number of eigenfaces")->required();
    train_cmd->add_option("--out", train_out, "model file path")->required();
    train_cmd->add_flag("--no-normalize", train_no_normalize,
                        "skip photometric normalization of training images");

    // recognize
    auto* rec_cmd = app.add_subcommand("recognize", "Classify a (partial) face image");
    std::string rec_model, rec_input, rec_metric = "sed", rec_cascade;
    bool rec_no_stitch = false, rec_no_normalize = false;
    std::optional<double> rec_axis;
    rec_cmd->add_option("--model", rec_model)->required();
    rec_cmd->add_option("--input", rec_input)->required();
    rec_cmd->add_option("--metric", rec_metric, "sed | cityblock");
    rec_cmd->add_option("--cascade", rec_cascade, "Haar cascade XML for nose detection");
    rec_cmd->add_option("--axis", rec_axis, "explicit symmetry axis column");
    rec_cmd->add_flag("--no-stitch", rec_no_stitch, "classify the input as-is");
    rec_cmd->add_flag("--no-normalize", rec_no_normalize, "skip photometric normalization");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Run the eigenface-count sweep");
    std::string eval_corpus, eval_config, eval_out = ".";
    eval_cmd->add_option("--corpus", eval_corpus)->required();
    eval_cmd->add_option("--config", eval_config, "TOML config file");
    eval_cmd->add_option("--out", eval_out, "report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stitch_cmd->parsed())
            return run_stitch(stitch_input, stitch_output, stitch_cascade, stitch_axis,
                              stitch_reference, stitch_report, params);

        if (quality_cmd->parsed()) {
            const QualityReport report =
                quality_report(load_image(q_original), load_image(q_stitched));
            if (q_json)
                std::cout << nlohmann::json{{"mse", report.mse}, {"cr", report.cr}}.dump() << "\n";
            else
                std::cout << "MSE=" << report.mse << " CR=" << report.cr << "\n";
            return 0;
        }

        if (ingest_cmd->parsed()) {
            const Corpus corpus = ingest(ingest_dir);
            std::cout << nlohmann::json{{"root", corpus.root},
                                        {"images", corpus.entries.size()},
                                        {"persons", corpus.person_count()},
                                        {"width", corpus.width},
                                        {"height", corpus.height}}
                             .dump(2)
                      << "\n";
            return 0;
        }

        if (train_cmd->parsed()) {
            const Corpus corpus = ingest(train_corpus);
            std::vector<GrayImage> images;
            std::vector<std::string> labels;
            images.reserve(corpus.entries.size());
            for (const auto& entry : corpus.entries) {
                GrayImage img = load_image(entry.path);
                images.push_back(train_no_normalize ? std::move(img)
                                                    : photometric_normalize(img));
                labels.push_back(entry.person);
            }
            const EigenModel model = train(images, labels, train_k);
            save_model(model, train_out);
            std::cout << "trained k=" << model.k() << " on " << model.gallery.size()
                      << " images, wrote " << train_out << "\n";
            return 0;
        }

        if (rec_cmd->parsed()) {
            const EigenModel model = load_model(rec_model);
            GrayImage probe = load_image(rec_input);
            if (!rec_no_stitch) {
                const SymmetryAxis axis = resolve_axis(probe, rec_cascade, rec_axis);
                const StitchOutcome outcome = stitch_face(probe, axis, StitchParams{});
                GrayImage fitted(model.width, model.height);
                for (int y = 0; y < model.height; ++y)
                    for (int x = 0; x < model.width; ++x)
                        fitted.at(x, y) = outcome.image.at(std::min(x, outcome.image.width - 1),
                                                           std::min(y, outcome.image.height - 1));
                probe = std::move(fitted);
            }
            if (!rec_no_normalize) probe = photometric_normalize(probe);
            const RecognitionResult result =
                classify(model, probe, metric_from_string(rec_metric));
            std::cout << nlohmann::json{{"label", result.label},
                                        {"nearest_label", result.nearest_label},
                                        {"distance", result.distance},
                                        {"runner_up_distance", result.runner_up_distance},
                                        {"metric", to_string(result.metric)}}
                             .dump(2)
                      << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            const Corpus corpus = ingest(eval_corpus);
            const ExperimentConfig cfg =
                eval_config.empty() ? ExperimentConfig{} : load_config(eval_config);
            const SweepReport report = run_sweep(corpus, cfg);
            std::filesystem::create_directories(eval_out);
            const auto csv_path = std::filesystem::path(eval_out) / "sweep.csv";
            const auto json_path = std::filesystem::path(eval_out) / "sweep.json";
            std::ofstream(csv_path) << report.to_csv();
            std::ofstream(json_path) << report.to_json() << "\n";
            std::cout << report.to_csv();
            std::cout << "reports written to " << eval_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "halfface: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "halfface: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
