#include "steer/cli.hpp"

#include "steer/error.hpp"
#include "steer/fit.hpp"
#include "steer/latent.hpp"
#include "steer/latent_io.hpp"
#include "steer/oracle.hpp"
#include "steer/registry.hpp"
#include "steer/text.hpp"

#include "detail.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>

namespace steer::cli {

using detail::json;

namespace {

std::optional<std::filesystem::path> optional_path(const std::string& s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    return std::filesystem::path(s);
}

json nullable(const std::optional<std::filesystem::path>& p)
{
    return p ? json(p->string()) : json(nullptr);
}

void write_or_print(const std::string& path, const std::string& contents, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << contents;
    } else {
        detail::write_text_file(path, contents);
    }
}

struct FitFlags {
    FitConfig cfg;

    void add_to(CLI::App* app)
    {
        app->add_option("--lr", cfg.learning_rate, "Gradient-descent learning rate")->capture_default_str();
        app->add_option("--epochs", cfg.epochs, "Gradient-descent epochs")->capture_default_str();
        app->add_option("--l2-discrete", cfg.l2_discrete, "L2 penalty for logistic fits")->capture_default_str();
        app->add_option("--l2-continuous", cfg.l2_continuous, "Ridge penalty for least-squares fits")->capture_default_str();
        app->add_option("--min-samples", cfg.min_samples_per_feature, "Minimum labeled samples per feature")
            ->capture_default_str();
        app->add_option("--closed-form-max-dim", cfg.closed_form_max_dim,
                        "Largest dimension solved by normal equations")
            ->capture_default_str();
        app->add_option("--threads", cfg.threads, "Fitting threads (0 = hardware)")->capture_default_str();
    }
};

// fit

struct FitOptions {
    std::string dataset;
    std::string registry;
    std::string out;
    std::string report;
    std::uint64_t rng_seed = 0;
    FitFlags fit;
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err)
{
    const FeatureRegistry reg = load_registry(optional_path(o.registry));
    const auto dataset = read_dataset_file(o.dataset, reg);
    FitConfig cfg = o.fit.cfg;
    cfg.rng_seed = o.rng_seed;
    const FitResult result = fit_all(dataset, reg, cfg);

    write_directions_file(o.out, result.directions);
    const std::string report = fit_report_json(result);
    if (!o.report.empty()) {
        detail::write_text_file(o.report, report);
    }

    out << "fitted " << result.valid_count() << "/" << reg.size() << " directions (d = " << result.directions.dim()
        << ") from " << dataset.size() << " samples -> " << o.out << "\n";
    if (result.complete()) {
        return ExitCode::ok;
    }
    for (const auto& r : result.reports) {
        if (!r.valid) {
            err << "skipped " << r.id << ": " << r.note << "\n";
        }
    }
    return ExitCode::degraded;
}

// angles

struct AnglesOptions {
    std::string directions;
    std::string out;
    double max_deviation = 15.0;
};

int cmd_angles(const AnglesOptions& o, std::ostream& out, std::ostream& err)
{
    const DirectionSet dirs = read_directions_file(o.directions);
    const Eigen::MatrixXd angles = angle_matrix(dirs);
    write_or_print(o.out, format_angle_csv(dirs.ids(), angles), out);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < angles.rows(); ++i) {
        for (Eigen::Index j = 0; j < angles.cols(); ++j) {
            if (i != j && std::isfinite(angles(i, j))) {
                worst = std::max(worst, std::abs(angles(i, j) - 90.0));
            }
        }
    }
    const double min_angle = min_off_diagonal(angles);
    char line[160];
    std::snprintf(line, sizeof line, "min off-diagonal angle: %.1f deg; max deviation from 90: %.1f deg (%s)\n",
                  min_angle, worst, worst > o.max_deviation ? "ENTANGLED" : "disentangled");
    (o.out.empty() || o.out == "-" ? err : out) << line;
    return ExitCode::ok;
}

// parse

struct ParseOptions {
    std::string text;
    std::string registry;
    std::string lexicon;
};

int cmd_parse(const ParseOptions& o, std::ostream& out, std::ostream&)
{
    const FeatureRegistry reg = load_registry(optional_path(o.registry));
    const Lexicon lexicon = load_lexicon(optional_path(o.lexicon), reg);
    const ParseResult result = parse(o.text, lexicon, reg);

    json doc = json::parse(feature_vector_json(result.features, reg));
    json spans = json::array();
    for (std::size_t i = 0; i < result.trace.spans.size(); ++i) {
        const auto& s = result.trace.spans[i];
        spans.push_back({{"begin", s.begin},
                         {"end", s.end},
                         {"feature", result.trace.resolved[i].first},
                         {"value", result.trace.resolved[i].second}});
    }
    doc["trace"] = {{"tokens", result.trace.tokens}, {"spans", spans}, {"unmatched", result.trace.unmatched}};
    out << doc.dump(2) << "\n";
    return ExitCode::ok;
}

// corpus

struct CorpusOptions {
    std::size_t n = 100;
    std::uint64_t rng_seed = 0;
    std::string registry;
    std::string lexicon;
    std::string out;
};

int cmd_corpus(const CorpusOptions& o, std::ostream& out, std::ostream&)
{
    const FeatureRegistry reg = load_registry(optional_path(o.registry));
    const Lexicon lexicon = load_lexicon(optional_path(o.lexicon), reg);
    write_or_print(o.out, serialize_corpus(build_corpus(o.n, lexicon, reg, o.rng_seed), reg), out);
    return ExitCode::ok;
}

// generate

struct GenerateOptions {
    std::string text;
    std::string registry;
    std::string lexicon;
    std::string directions;
    std::string seed_mode = "gaussian";
    std::string seed_file;
    std::uint64_t rng_seed = 0;
    double tol = NavigationDefaults::tol;
    int max_passes = NavigationDefaults::max_passes;
    std::string mode = "sequential";
    std::string out;
    std::string provenance;
    std::string from_provenance;
    bool render = false;
};

GenerateOptions options_from_provenance(const std::filesystem::path& path, const GenerateOptions& cli)
{
    const json doc = detail::parse_json(detail::read_text_file(path), path.string());
    auto str = [&](const json& v) { return v.is_null() ? std::string() : v.get<std::string>(); };
    GenerateOptions o;
    o.text = detail::require_string(detail::require_field(doc, "text", "provenance"), "provenance.text");
    o.registry = str(detail::require_field(doc, "registry", "provenance"));
    o.lexicon = str(detail::require_field(doc, "lexicon", "provenance"));
    o.directions = detail::require_string(detail::require_field(doc, "directions", "provenance"), "provenance.directions");
    const auto& seed = detail::require_field(doc, "seed", "provenance");
    o.seed_mode = detail::require_string(detail::require_field(seed, "mode", "provenance.seed"), "provenance.seed.mode");
    o.seed_file = str(detail::require_field(seed, "path", "provenance.seed"));
    o.rng_seed = detail::require_field(seed, "rng_seed", "provenance.seed").get<std::uint64_t>();
    const auto& nav = detail::require_field(doc, "navigation", "provenance");
    o.mode = detail::require_string(detail::require_field(nav, "mode", "provenance.navigation"), "provenance.navigation.mode");
    o.tol = detail::require_number(detail::require_field(nav, "tol", "provenance.navigation"), "provenance.navigation.tol");
    o.max_passes = detail::require_field(nav, "max_passes", "provenance.navigation").get<int>();
    o.out = cli.out.empty() ? detail::require_string(detail::require_field(doc, "output", "provenance"), "provenance.output")
                            : cli.out;
    o.provenance = cli.provenance;
    return o;
}

int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err,
                 const std::optional<std::string>& expected_latent_hash = std::nullopt)
{
    if (!(o.tol > 0.0)) {
        throw ValidationError("--tol must be positive");
    }
    if (o.mode != "sequential" && o.mode != "vectorized") {
        throw ValidationError("--mode must be 'sequential' or 'vectorized'");
    }
    const FeatureRegistry reg = load_registry(optional_path(o.registry));
    const Lexicon lexicon = load_lexicon(optional_path(o.lexicon), reg);
    const std::string directions_text = detail::read_text_file(o.directions);
    DirectionSet dirs = [&] {
        try {
            return parse_directions(directions_text);
        } catch (const FormatError& e) {
            throw FormatError(o.directions + ": " + e.what());
        }
    }();
    dirs.check_matches(reg);

    SeedSpec seed_spec;
    seed_spec.rng_seed = o.rng_seed;
    if (o.seed_mode == "file") {
        seed_spec.mode = SeedSpec::Mode::FromFile;
        seed_spec.path = optional_path(o.seed_file);
    } else if (o.seed_mode != "gaussian") {
        throw ValidationError("--seed-mode must be 'gaussian' or 'file'");
    }

    int exit_code = ExitCode::ok;
    FeatureVector target = clamp(parse(o.text, lexicon, reg).features, reg);
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target.mask[i] && !dirs.valid(i)) {
            err << "warning: \"" << reg[i].id << "\" has no fitted direction; ignoring it\n";
            target.mask[i] = false;
            exit_code = ExitCode::degraded;
        }
    }

    const LatentVector seed = sample_seed(seed_spec, dirs.dim());
    const FeatureVector v_rand = project_all(seed, dirs);
    std::optional<LatentVector> result;
    int passes = 0;
    double residual = 0.0;
    if (!target.any()) {
        err << "no recognizable features in the description; writing the seed latent\n";
        exit_code = ExitCode::degraded;
        result = seed;
    } else if (o.mode == "vectorized") {
        result = navigate_vectorized(seed, target, dirs);
        passes = 1;
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (target.mask[i]) {
                residual = std::max(residual, std::abs(project_feature(*result, dirs.row(i)) - target.values[i]));
            }
        }
    } else {
        SequentialResult nav = navigate_sequential(seed, target, dirs, o.tol, o.max_passes);
        passes = nav.passes;
        residual = nav.residual;
        result = std::move(nav.latent);
    }

    const std::string latent_text = serialize_latent(*result);
    const std::string latent_hash = detail::hex64(detail::fnv1a64(latent_text));
    detail::write_text_file(o.out, latent_text);

    json v_rand_json = json::object();
    for (std::size_t i = 0; i < v_rand.size(); ++i) {
        v_rand_json[reg[i].id] = v_rand.values[i];
    }
    json provenance{
        {"text", o.text},
        {"registry", nullable(optional_path(o.registry))},
        {"lexicon", nullable(optional_path(o.lexicon))},
        {"directions", o.directions},
        {"directions_fnv1a64", detail::hex64(detail::fnv1a64(directions_text))},
        {"seed", {{"mode", o.seed_mode}, {"rng_seed", o.rng_seed}, {"path", nullable(seed_spec.path)}}},
        {"navigation", {{"mode", o.mode}, {"tol", o.tol}, {"max_passes", o.max_passes}, {"passes", passes}, {"residual", residual}}},
        {"target", json::parse(feature_vector_json(target, reg))},
        {"v_rand", std::move(v_rand_json)},
        {"output", o.out},
        {"latent_fnv1a64", latent_hash},
    };
    const std::string provenance_path = o.provenance.empty() ? o.out + ".provenance.json" : o.provenance;
    detail::write_text_file(provenance_path, provenance.dump(2) + "\n");

    out << "features targeted: " << target.count() << ", mode " << o.mode << ", passes " << passes << ", residual "
        << residual << "\nlatent -> " << o.out << "\nprovenance -> " << provenance_path << "\n";
    if (o.render) {
        out << "render with the bridge: stylegan-bridge render --latent " << o.out << " --weights <checkpoint>\n";
    }
    if (expected_latent_hash && *expected_latent_hash != latent_hash) {
        err << "replay does not reproduce the recorded latent (" << latent_hash << " != " << *expected_latent_hash << ")\n";
        return ExitCode::error;
    }
    return exit_code;
}

int cmd_generate_entry(const GenerateOptions& cli, std::ostream& out, std::ostream& err)
{
    if (cli.from_provenance.empty()) {
        if (cli.directions.empty() || cli.out.empty()) {
            throw ValidationError("generate needs --directions and --out (or --from-provenance)");
        }
        return cmd_generate(cli, out, err);
    }
    const std::filesystem::path path(cli.from_provenance);
    const GenerateOptions o = options_from_provenance(path, cli);
    const json doc = json::parse(detail::read_text_file(path));
    const std::string recorded_dirs = doc.value("directions_fnv1a64", "");
    const std::string actual_dirs = detail::hex64(detail::fnv1a64(detail::read_text_file(o.directions)));
    if (!recorded_dirs.empty() && recorded_dirs != actual_dirs) {
        err << "directions file " << o.directions << " changed since the provenance was recorded\n";
        return ExitCode::error;
    }
    return cmd_generate(o, out, err, doc.value("latent_fnv1a64", ""));
}

// oracle-eval

struct OracleOptions {
    std::size_t dim = 64;
    std::size_t features = 34;
    std::size_t samples = 3000;
    double noise = 0.1;
    double entanglement = 80.0;
    std::string kinds = "registry";
    double threshold = 10.0;
    double nav_tolerance = 0.15;
    std::uint64_t rng_seed = 0;
    std::string out;
    std::string dataset_out;
    std::string planted_out;
    std::string fitted_out;
    FitFlags fit;
};

WorldSpec world_spec(const OracleOptions& o)
{
    WorldSpec spec;
    spec.dim = o.dim;
    spec.entanglement_deg = o.entanglement;
    spec.noise_sigma = o.noise;
    spec.rng_seed = o.rng_seed;
    const auto& builtin = FeatureRegistry::builtin();
    if (o.kinds == "registry") {
        spec.kinds = registry_kinds(o.features);
    } else if (o.kinds == "discrete" || o.kinds == "continuous") {
        spec.kinds.assign(o.features, feature_kind_from_string(o.kinds));
    } else {
        throw ValidationError("--kinds must be registry, discrete or continuous");
    }
    if (o.features <= builtin.size()) {
        for (std::size_t i = 0; i < o.features; ++i) {
            spec.ids.push_back(builtin[i].id);
        }
    }
    return spec;
}

int cmd_oracle_eval(const OracleOptions& o, std::ostream& out, std::ostream& err)
{
    OracleEvalConfig cfg;
    cfg.world = world_spec(o);
    cfg.samples = o.samples;
    cfg.fit = o.fit.cfg;
    cfg.fit.rng_seed = o.rng_seed;
    cfg.threshold_deg = o.threshold;
    cfg.navigation_tolerance = o.nav_tolerance;

    if (!o.dataset_out.empty() || !o.planted_out.empty() || !o.fitted_out.empty()) {
        const OracleWorld world = make_world(cfg.world);
        if (!o.planted_out.empty()) {
            write_directions_file(o.planted_out, world.planted);
        }
        if (!o.dataset_out.empty() || !o.fitted_out.empty()) {
            const auto dataset = generate_dataset(world, cfg.samples);
            if (!o.dataset_out.empty()) {
                detail::write_text_file(o.dataset_out, serialize_dataset(dataset));
            }
            if (!o.fitted_out.empty()) {
                write_directions_file(o.fitted_out, fit_all(dataset, world.registry(), cfg.fit).directions);
            }
        }
    }

    const OracleEvalReport report = run_oracle_eval(cfg);
    write_or_print(o.out, report.to_json(), out);
    char line[200];
    std::snprintf(line, sizeof line,
                  "max angular error %.3f deg, mean %.3f deg (threshold %.3f): %s; navigation deviation %.4f; %.2f s\n",
                  report.max_error_deg, report.mean_error_deg, report.threshold_deg,
                  report.passed() ? "PASS" : "FAIL", report.navigation_max_deviation, report.seconds);
    (o.out.empty() || o.out == "-" ? err : out) << line;
    return report.passed() ? ExitCode::ok : ExitCode::degraded;
}

// seed-export

struct SeedExportOptions {
    std::size_t dim = 18 * 512;
    std::size_t layers = 0;
    std::uint64_t rng_seed = 0;
    std::size_t count = 1;
    std::string out;
};

int cmd_seed_export(const SeedExportOptions& o, std::ostream& out, std::ostream&)
{
    auto make = [&](std::uint64_t seed) {
        LatentVector v = sample_seed({SeedSpec::Mode::OracleGaussian, seed, std::nullopt}, o.dim);
        if (o.layers == 0) {
            return v;
        }
        if (o.dim % o.layers != 0) {
            throw DimensionError("--layers must divide --dim");
        }
        return LatentVector(v.data(), LatentShape{o.layers, o.dim / o.layers});
    };
    if (o.count == 1) {
        write_latent_file(o.out, make(o.rng_seed));
        out << "seed " << o.rng_seed << " -> " << o.out << "\n";
        return ExitCode::ok;
    }
    std::filesystem::create_directories(o.out);
    for (std::size_t i = 0; i < o.count; ++i) {
        const auto path = std::filesystem::path(o.out) / ("seed_" + std::to_string(o.rng_seed + i) + ".json");
        write_latent_file(path, make(o.rng_seed + i));
    }
    out << o.count << " seeds -> " << o.out << "\n";
    return ExitCode::ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Text-conditioned latent steering toolkit"};
    app.name(args.empty() ? "steer" : std::filesystem::path(args.front()).filename().string());
    app.require_subcommand(1);

    FitOptions fit_o;
    auto* fit = app.add_subcommand("fit", "Fit feature directions from a labeled latent dataset");
    fit->add_option("--dataset", fit_o.dataset, "Dataset JSONL")->required();
    fit->add_option("--registry", fit_o.registry, "Registry JSON (default: built-in)");
    fit->add_option("--out", fit_o.out, "Directions JSON to write")->required();
    fit->add_option("--report", fit_o.report, "Fit report JSON to write");
    fit->add_option("--rng-seed", fit_o.rng_seed)->capture_default_str();
    fit_o.fit.add_to(fit);

    AnglesOptions angles_o;
    auto* angles = app.add_subcommand("angles", "Pairwise angle report of a directions file");
    angles->add_option("--directions", angles_o.directions, "Directions JSON")->required();
    angles->add_option("--out", angles_o.out, "CSV to write (default: stdout)");
    angles->add_option("--max-deviation", angles_o.max_deviation, "Flag entanglement beyond this many degrees from 90")
        ->capture_default_str();

    ParseOptions parse_o;
    auto* parse_cmd = app.add_subcommand("parse", "Parse a description into feature values");
    parse_cmd->add_option("--text", parse_o.text, "Description")->required();
    parse_cmd->add_option("--registry", parse_o.registry);
    parse_cmd->add_option("--lexicon", parse_o.lexicon);

    CorpusOptions corpus_o;
    auto* corpus = app.add_subcommand("corpus", "Generate a labeled description corpus");
    corpus->add_option("--n", corpus_o.n, "Number of descriptions")->capture_default_str();
    corpus->add_option("--rng-seed", corpus_o.rng_seed)->capture_default_str();
    corpus->add_option("--registry", corpus_o.registry);
    corpus->add_option("--lexicon", corpus_o.lexicon);
    corpus->add_option("--out", corpus_o.out, "JSONL to write (default: stdout)");

    GenerateOptions gen_o;
    auto* gen = app.add_subcommand("generate", "Description -> navigated latent");
    gen->add_option("--text", gen_o.text, "Description");
    gen->add_option("--registry", gen_o.registry);
    gen->add_option("--lexicon", gen_o.lexicon);
    gen->add_option("--directions", gen_o.directions, "Directions JSON");
    gen->add_option("--seed-mode", gen_o.seed_mode, "gaussian or file")->capture_default_str();
    gen->add_option("--seed-file", gen_o.seed_file, "Latent JSON used when --seed-mode file");
    gen->add_option("--rng-seed", gen_o.rng_seed)->capture_default_str();
    gen->add_option("--tol", gen_o.tol)->capture_default_str();
    gen->add_option("--max-passes", gen_o.max_passes)->capture_default_str();
    gen->add_option("--mode", gen_o.mode, "sequential or vectorized")->capture_default_str();
    gen->add_option("--out", gen_o.out, "Latent JSON to write");
    gen->add_option("--provenance", gen_o.provenance, "Provenance JSON (default: <out>.provenance.json)");
    gen->add_option("--from-provenance", gen_o.from_provenance, "Replay a recorded run");
    gen->add_flag("--render", gen_o.render, "Print the bridge command that renders the latent");

    OracleOptions oracle_o;
    auto* oracle = app.add_subcommand("oracle-eval", "Fit on a synthetic world and measure direction recovery");
    oracle->add_option("--dim", oracle_o.dim)->capture_default_str();
    oracle->add_option("--features", oracle_o.features)->capture_default_str();
    oracle->add_option("--samples", oracle_o.samples)->capture_default_str();
    oracle->add_option("--noise", oracle_o.noise)->capture_default_str();
    oracle->add_option("--entanglement", oracle_o.entanglement, "Minimum planted angle, degrees")->capture_default_str();
    oracle->add_option("--kinds", oracle_o.kinds, "registry, discrete or continuous")->capture_default_str();
    oracle->add_option("--threshold", oracle_o.threshold, "Max angular error, degrees")->capture_default_str();
    oracle->add_option("--nav-tolerance", oracle_o.nav_tolerance)->capture_default_str();
    oracle->add_option("--rng-seed", oracle_o.rng_seed)->capture_default_str();
    oracle->add_option("--out", oracle_o.out, "Report JSON (default: stdout)");
    oracle->add_option("--dataset-out", oracle_o.dataset_out, "Also write the generated dataset JSONL");
    oracle->add_option("--planted-out", oracle_o.planted_out, "Also write the planted directions");
    oracle->add_option("--fitted-out", oracle_o.fitted_out, "Also write the fitted directions");
    oracle_o.fit.add_to(oracle);

    SeedExportOptions seed_o;
    auto* seed = app.add_subcommand("seed-export", "Write Gaussian seed latents");
    seed->add_option("--dim", seed_o.dim)->capture_default_str();
    seed->add_option("--layers", seed_o.layers, "Layer count for the shape metadata");
    seed->add_option("--rng-seed", seed_o.rng_seed)->capture_default_str();
    seed->add_option("--count", seed_o.count, "Seeds to write; --out is a directory when > 1")->capture_default_str();
    seed->add_option("--out", seed_o.out)->required();

    // CLI11 consumes its argument vector back to front.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();
    }
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::error;
    }

    try {
        if (*fit) {
            return cmd_fit(fit_o, out, err);
        }
        if (*angles) {
            return cmd_angles(angles_o, out, err);
        }
        if (*parse_cmd) {
            return cmd_parse(parse_o, out, err);
        }
        if (*corpus) {
            return cmd_corpus(corpus_o, out, err);
        }
        if (*gen) {
            return cmd_generate_entry(gen_o, out, err);
        }
        if (*oracle) {
            return cmd_oracle_eval(oracle_o, out, err);
        }
        if (*seed) {
            return cmd_seed_export(seed_o, out, err);
        }
    } catch (const EmptyFitError& e) {
        err << "empty-fit error: " << e.what() << "\n";
        return ExitCode::error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return ExitCode::error;
    }
    return ExitCode::error;
}

} // namespace steer::cli
