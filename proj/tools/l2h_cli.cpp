// l2h: build, evaluate and render cluster hierarchies from model logits.
//
// Exit codes: 0 success, 2 input/validation failure, 3 degenerate problem
// size, 64 usage error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "l2h/agglom.hpp"
#include "l2h/build.hpp"
#include "l2h/dataset.hpp"
#include "l2h/export.hpp"
#include "l2h/metrics.hpp"
#include "l2h/tree.hpp"

namespace {

constexpr const char* tool_version = "0.1.0";

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_degenerate = 3;
constexpr int exit_usage = 64;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string infer_format(const std::string& path, const std::string& explicit_format) {
    if (!explicit_format.empty()) return explicit_format;
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".json") return "json";
    if (ext == ".nwk" || ext == ".newick" || ext == ".tree") return "newick";
    if (ext == ".dot" || ext == ".gv") return "dot";
    if (ext == ".svg") return "svg";
    throw UsageError("cannot infer output format from '" + path + "'; pass --format");
}

void write_output(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw l2h::IoError("cannot create " + path);
    out << text;
    if (!out) throw l2h::IoError("write failed for " + path);
}

struct RenderInputs {
    std::vector<l2h::LeafAnnotation> annotations;
    std::optional<l2h::ColorMap> colors;
    int size_px = 1024;
};

std::string render(const l2h::Hierarchy& h, const std::string& format, const RenderInputs& in) {
    const l2h::ColorMap* colors = in.colors ? &*in.colors : nullptr;
    if (format == "json") return l2h::emit_json(h, in.annotations);
    if (format == "newick") return l2h::emit_newick(h, in.annotations);
    if (format == "dot") return l2h::emit_dot(h, in.annotations, colors);
    return l2h::emit_svg_circular(h, in.annotations, colors, in.size_px);
}

l2h::HierarchyDocument read_hierarchy(const std::string& path) {
    const std::string text = l2h::detail::read_text_file(path);
    const auto ext = std::filesystem::path(path).extension().string();
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool is_json = ext == ".json" || (ext != ".nwk" && ext != ".newick" && first != std::string::npos &&
                                            text[first] == '{');
    if (is_json) return l2h::parse_json(text);
    return {l2h::hierarchy_from_newick(l2h::parse_newick(text)), {}};
}

l2h::DatasetBundle load_logits(const std::string& path, bool csv_header, std::optional<l2h::LabelVector> labels = {}) {
    auto logits = l2h::read_matrix(path, csv_header);
    return l2h::validate_dataset(std::move(logits), std::move(labels), {path});
}

unsigned default_threads() {
    if (const char* env = std::getenv("L2H_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

class Manifest {
public:
    explicit Manifest(std::string command) : start_{std::chrono::steady_clock::now()} {
        doc_["tool"] = "l2h";
        doc_["version"] = tool_version;
        doc_["command"] = std::move(command);
        doc_["inputs"] = nlohmann::ordered_json::object();
        doc_["config"] = nlohmann::ordered_json::object();
        doc_["outputs"] = nlohmann::ordered_json::array();
    }
    nlohmann::ordered_json& inputs() { return doc_["inputs"]; }
    nlohmann::ordered_json& config() { return doc_["config"]; }
    void output(const std::string& path) { doc_["outputs"].push_back(path); }

    void print() {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        doc_["duration_seconds"] = elapsed.count();
        std::cerr << doc_.dump() << "\n";
    }

private:
    std::chrono::steady_clock::time_point start_;
    nlohmann::ordered_json doc_;
};

const std::vector<std::string> output_formats{"json", "newick", "dot", "svg"};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchies of clusters from the logits of a flat clustering or classification model"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    bool csv_header = false;
    app.add_flag("--csv-header", csv_header, "CSV inputs start with a header row");

    // build
    auto* build = app.add_subcommand("build", "Build a hierarchy from an N x K logits matrix (.npy or .csv)");
    std::string b_logits, b_out, b_format, b_labels, b_colormap;
    std::string b_aggregation = "sum_of_means";
    unsigned b_threads = default_threads();
    int b_size = 1024;
    build->add_option("logits", b_logits, "Logits file")->required();
    build->add_option("-o,--output", b_out, "Output path ('-' for stdout)")->required();
    build->add_option("--aggregation", b_aggregation, "Group score aggregation")
        ->check(CLI::IsMember({"sum_of_means", "sum", "mean"}));
    build->add_option("--format", b_format, "Output format (default: from extension)")
        ->check(CLI::IsMember(output_formats));
    build->add_option("--labels", b_labels, "True labels; adds leaf annotations to the output");
    build->add_option("--colormap", b_colormap, "label,group[,color] CSV for dot/svg leaf colors");
    build->add_option("--size", b_size, "SVG size in pixels")->check(CLI::Range(256, 1 << 16));
    build->add_option("--threads", b_threads, "Worker threads (default: $L2H_THREADS or 1)")->check(CLI::PositiveNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "Print flat and hierarchical metrics as JSON");
    std::string e_logits, e_hierarchy, e_labels;
    eval->add_option("logits", e_logits, "Logits file")->required();
    eval->add_option("hierarchy", e_hierarchy, "Hierarchy file (.json or .nwk)")->required();
    eval->add_option("labels", e_labels, "True labels file")->required();

    // render
    auto* rend = app.add_subcommand("render", "Render a hierarchy file as Newick, DOT or circular SVG");
    std::string r_hierarchy, r_out, r_format, r_logits, r_labels, r_colormap;
    std::optional<l2h::NodeId> r_subtree;
    int r_size = 1024;
    rend->add_option("hierarchy", r_hierarchy, "Hierarchy file (.json or .nwk)")->required();
    rend->add_option("-o,--output", r_out, "Output path ('-' for stdout)")->required();
    rend->add_option("--format", r_format, "Output format (default: from extension)")
        ->check(CLI::IsMember(output_formats));
    rend->add_option("--logits", r_logits, "Logits file, with --labels, for leaf annotations");
    rend->add_option("--labels", r_labels, "True labels file");
    rend->add_option("--colormap", r_colormap, "label,group[,color] CSV for leaf colors");
    rend->add_option("--subtree", r_subtree, "Render only the subtree rooted at this internal node id");
    rend->add_option("--size", r_size, "SVG size in pixels")->check(CLI::Range(256, 1 << 16));

    // agglomerate
    auto* agg = app.add_subcommand("agglomerate", "Agglomerative baseline hierarchy over a feature matrix");
    std::string a_features, a_out, a_format;
    std::string a_method = "ward";
    agg->add_option("features", a_features, "Feature matrix (.npy or .csv)")->required();
    agg->add_option("-m,--method", a_method, "Linkage method")
        ->check(CLI::IsMember({"single", "complete", "average", "ward"}));
    agg->add_option("-o,--output", a_out, "Output path ('-' for stdout)")->required();
    agg->add_option("--format", a_format, "Output format (default: from extension)")
        ->check(CLI::IsMember(output_formats));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*build) {
            Manifest manifest("build");
            const std::string format = infer_format(b_out, b_format);
            std::optional<l2h::LabelVector> labels;
            if (!b_labels.empty()) labels = l2h::read_labels(b_labels);
            const auto data = load_logits(b_logits, csv_header, std::move(labels));
            l2h::L2HConfig config;
            config.aggregation = l2h::parse_aggregation(b_aggregation);
            config.num_threads = b_threads;
            const auto table = l2h::compute_assignments(data.logits);
            const auto h = l2h::build_hierarchy(data.logits, table, config);

            RenderInputs in;
            in.size_px = b_size;
            if (data.labels) in.annotations = l2h::annotate_leaves(l2h::to_tree(h), table, *data.labels);
            if (!b_colormap.empty()) in.colors = l2h::parse_colormap(b_colormap);
            write_output(b_out, render(h, format, in));

            manifest.inputs()["logits"] = b_logits;
            if (!b_labels.empty()) manifest.inputs()["labels"] = b_labels;
            manifest.inputs()["n_rows"] = data.logits.rows();
            manifest.inputs()["n_clusters"] = data.logits.cols();
            manifest.inputs()["precision"] = data.logits.precision() == l2h::Precision::single ? "f4" : "f8";
            manifest.inputs()["memory_mapped"] = data.logits.is_mapped();
            manifest.config()["aggregation"] = b_aggregation;
            manifest.config()["format"] = format;
            manifest.config()["threads"] = b_threads;
            manifest.output(b_out);
            manifest.print();
        } else if (*eval) {
            Manifest manifest("eval");
            const auto labels = l2h::read_labels(e_labels);
            const auto data = load_logits(e_logits, csv_header, labels);
            const auto doc = read_hierarchy(e_hierarchy);
            if (doc.hierarchy.n_clusters != data.logits.cols()) {
                throw l2h::ValidationError("hierarchy has " + std::to_string(doc.hierarchy.n_clusters) +
                                           " leaves but logits have " + std::to_string(data.logits.cols()) +
                                           " clusters");
            }
            const auto table = l2h::compute_assignments(data.logits);
            const auto report = l2h::evaluate(doc.hierarchy, table, *data.labels);
            std::cout << l2h::emit_report_json(report);
            manifest.inputs()["logits"] = e_logits;
            manifest.inputs()["hierarchy"] = e_hierarchy;
            manifest.inputs()["labels"] = e_labels;
            manifest.output("-");
            manifest.print();
        } else if (*rend) {
            Manifest manifest("render");
            const std::string format = infer_format(r_out, r_format);
            auto doc = read_hierarchy(r_hierarchy);
            RenderInputs in;
            in.size_px = r_size;
            in.annotations = doc.annotations;
            if (!r_logits.empty() || !r_labels.empty()) {
                if (r_logits.empty() || r_labels.empty()) {
                    throw UsageError("--logits and --labels must be given together");
                }
                const auto data = load_logits(r_logits, csv_header, l2h::read_labels(r_labels));
                if (data.logits.cols() != doc.hierarchy.n_clusters) {
                    throw l2h::ValidationError("hierarchy has " + std::to_string(doc.hierarchy.n_clusters) +
                                               " leaves but logits have " + std::to_string(data.logits.cols()) +
                                               " clusters");
                }
                in.annotations = l2h::annotate_leaves(l2h::to_tree(doc.hierarchy),
                                                      l2h::compute_assignments(data.logits), *data.labels);
            }
            if (!r_colormap.empty()) in.colors = l2h::parse_colormap(r_colormap);
            l2h::Hierarchy target = doc.hierarchy;
            if (r_subtree) {
                std::vector<l2h::ClusterId> original;
                target = l2h::subtree(doc.hierarchy, *r_subtree, &original);
                if (!in.annotations.empty()) {
                    std::vector<l2h::LeafAnnotation> remapped;
                    for (std::size_t i = 0; i < original.size(); ++i) {
                        auto a = in.annotations.at(original[i]);
                        a.leaf = static_cast<l2h::ClusterId>(i);
                        remapped.push_back(std::move(a));
                    }
                    in.annotations = std::move(remapped);
                } else {
                    // Keep the original cluster ids visible on the extracted leaves.
                    for (std::size_t i = 0; i < original.size(); ++i) {
                        l2h::LeafAnnotation a;
                        a.leaf = static_cast<l2h::ClusterId>(i);
                        a.label_name = std::to_string(original[i]);
                        in.annotations.push_back(std::move(a));
                    }
                }
            }
            write_output(r_out, render(target, format, in));
            manifest.inputs()["hierarchy"] = r_hierarchy;
            manifest.config()["format"] = format;
            if (r_subtree) manifest.config()["subtree"] = *r_subtree;
            manifest.output(r_out);
            manifest.print();
        } else if (*agg) {
            Manifest manifest("agglomerate");
            const std::string format = infer_format(a_out, a_format);
            const auto features = l2h::read_matrix(a_features, csv_header);
            l2h::require_finite(features);
            const auto method = l2h::parse_linkage_method(a_method);
            const auto h = l2h::linkage(features, method);
            write_output(a_out, render(h, format, {}));
            manifest.inputs()["features"] = a_features;
            manifest.inputs()["n_items"] = features.rows();
            manifest.config()["method"] = a_method;
            manifest.config()["format"] = format;
            manifest.output(a_out);
            manifest.print();
        }
    } catch (const UsageError& e) {
        std::cerr << "l2h: usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const l2h::DegenerateError& e) {
        std::cerr << "l2h: " << e.what() << "\n";
        return exit_degenerate;
    } catch (const std::exception& e) {
        std::cerr << "l2h: " << e.what() << "\n";
        return exit_input;
    }
    return exit_ok;
}
