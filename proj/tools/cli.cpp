#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "reasonedit/binary_io.hpp"
#include "reasonedit/codebook.hpp"
#include "reasonedit/dual_embedding.hpp"
#include "reasonedit/edit_model.hpp"
#include "reasonedit/engine_config.hpp"
#include "reasonedit/errors.hpp"
#include "reasonedit/eval_harness.hpp"
#include "reasonedit/retrieval.hpp"
#include "reasonedit/topology.hpp"

namespace reasonedit::cli {

using nlohmann::json;

int exit_code_for(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const TransportError&) {
        return kProviderUnreachable;
    } catch (const InfeasibleError&) {
        return kInfeasible;
    } catch (const CompatibilityError&) {
        return kIncompatible;
    } catch (...) {
        return kInputError;
    }
}

namespace {

// Writes to a file when a path is given, else to the fallback stream.
class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            stream_ = &fallback;
            return;
        }
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*file_) throw ArgumentError("cannot write '" + path + "'");
        stream_ = file_.get();
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

std::ifstream open_input(const std::string& path, const char* what) {
    if (path.empty()) throw ArgumentError(std::string("no ") + what + " file given");
    std::ifstream in(path);
    if (!in) throw NotFoundError(std::string("cannot open ") + what + " '" + path + "'");
    return in;
}

std::string pick(const std::string& flag, const std::optional<std::string>& from_config) {
    return !flag.empty() ? flag : from_config.value_or("");
}

DualConfig load_dual(const std::string& path) {
    auto in = open_input(path, "dual config");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("dual config '" + path + "' is not valid JSON: " + e.what());
    }
    return dual_config_from_json(j);
}

void check_manifest(Provider& provider, const DualConfig& dual) {
    if (provider.manifest().hash() != dual.manifest_hash)
        throw CompatibilityError("provider manifest differs from the one the dual config was fitted under");
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> distinct(const std::vector<ImageText>& pool, bool images) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : pool) {
        const std::string& v = images ? p.image_ref : p.text;
        if (seen.insert(v).second) out.push_back(v);
    }
    return out;
}

struct Common {
    std::string config;
    std::string out;
};

EngineConfig load_config(const Common& c) {
    if (c.config.empty()) {
        EngineConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_engine_config(c.config);
}

struct BatchOverrides {
    CLI::Option* n = nullptr;
    CLI::Option* batches = nullptr;
    CLI::Option* seed = nullptr;
    std::uint32_t n_value = 0;
    std::uint32_t batches_value = 0;
    std::uint64_t seed_value = 0;

    void attach(CLI::App* app) {
        n = app->add_option("--n", n_value, "Pairs per sampled batch");
        batches = app->add_option("--batches", batches_value, "Number of sampled batches (B)");
        seed = app->add_option("--seed", seed_value, "Batch sampling seed");
    }
    void apply(EngineConfig& cfg) const {
        if (n->count()) cfg.batch.n = n_value;
        if (batches->count()) cfg.batch.batches = batches_value;
        if (seed->count()) cfg.batch.seed = seed_value;
        cfg.batch.validate();
    }
};

struct RetrievalOverrides {
    CLI::Option* k = nullptr;
    CLI::Option* p = nullptr;
    std::uint32_t k_value = 0;
    double p_value = 0.0;

    void attach(CLI::App* app) {
        k = app->add_option("--k", k_value, "Neighbours to retrieve");
        p = app->add_option("--p", p_value, "Rejection percentile");
    }
    void apply(EngineConfig& cfg) const {
        if (k->count()) cfg.retrieval.k = k_value;
        if (p->count()) cfg.retrieval.p = p_value;
        cfg.retrieval.validate();
    }
};

// topology-sweep

struct SweepArgs {
    Common common;
    std::string pool;
    std::string block = "vision";
    std::string pooling = "mean";
    int first = -1;
    int last = -1;
    BatchOverrides batch;
};

int run_sweep(const SweepArgs& a, std::ostream& out) {
    EngineConfig cfg = load_config(a.common);
    a.batch.apply(cfg);
    const std::string pool_path = pick(a.pool, cfg.paths.pair_pool);
    if (pool_path.empty()) throw ArgumentError("no pair pool given");
    const auto pool = read_pair_pool(pool_path);
    const auto texts = cfg.paths.mismatch_texts ? read_lines(*cfg.paths.mismatch_texts) : distinct(pool, false);
    const auto images =
        cfg.paths.mismatch_images ? read_lines(*cfg.paths.mismatch_images) : distinct(pool, true);

    auto provider = make_provider(cfg.provider);
    const Manifest manifest = provider->manifest();
    const Block block = parse_block(a.block);
    if (block == Block::sentence_encoder) throw ArgumentError("sweeps cover vision, merger or language layers");
    const Pooling pooling = parse_pooling(a.pooling);
    const auto layers = static_cast<int>(manifest.block(block).layers);
    const int first = a.first < 0 ? 0 : a.first;
    const int last = a.last < 0 ? layers - 1 : a.last;
    if (first > last || last >= layers)
        throw ManifestError("layer range " + std::to_string(first) + ".." + std::to_string(last) +
                            " is outside the " + std::to_string(layers) + " advertised layers");

    Output sink(pick(a.common.out, cfg.paths.output), out);
    for (int l = first; l <= last; ++l) {
        const LayerSpec layer{block, static_cast<std::uint32_t>(l), pooling};
        const auto embedder = layer_embedder(*provider, layer);
        const auto qv = sample_modularity(pool, ModularityMode::vision, cfg.batch, embedder);
        const auto ql = sample_modularity(pool, ModularityMode::language, cfg.batch, embedder);
        const auto qb = sample_modularity(pool, ModularityMode::bimodal, cfg.batch, embedder, provider.get());
        const auto bv = vision_bias(pool, cfg.batch, embedder, texts, *provider, cfg.bias);
        const auto bl = language_bias(pool, cfg.batch, embedder, images, *provider, cfg.bias);
        json row{{"layer", to_string(layer)},
                 {"block", std::string(to_string(block))},
                 {"index", l},
                 {"q_vision", qv.mean},
                 {"q_vision_std", qv.std},
                 {"q_language", ql.mean},
                 {"q_language_std", ql.std},
                 {"q_bimodal", qb.mean},
                 {"q_bimodal_std", qb.std},
                 {"bias_vision", bv.mean},
                 {"bias_vision_std", bv.std},
                 {"bias_language", bl.mean},
                 {"bias_language_std", bl.std}};
        *sink << row.dump() << '\n';
    }
    return kOk;
}

// fit-dual

struct FitArgs {
    Common common;
    std::string pool;
    std::string layer;
    std::string pooling = "mean";
    std::string report;
    BatchOverrides batch;
};

int run_fit(const FitArgs& a, std::ostream& out) {
    EngineConfig cfg = load_config(a.common);
    a.batch.apply(cfg);
    const std::string pool_path = pick(a.pool, cfg.paths.pair_pool);
    if (pool_path.empty()) throw ArgumentError("no pair pool given");
    const auto pool = read_pair_pool(pool_path);
    auto provider = make_provider(cfg.provider);
    const Manifest manifest = provider->manifest();

    std::vector<LayerScore> scores;
    LayerSpec layer;
    if (a.layer.empty()) {
        const Pooling pooling = parse_pooling(a.pooling);
        for (std::uint32_t l = 0; l < manifest.vision.layers; ++l) {
            const LayerSpec spec{Block::vision, l, pooling};
            const auto q = sample_modularity(pool, ModularityMode::bimodal, cfg.batch,
                                             layer_embedder(*provider, spec), provider.get());
            scores.push_back(LayerScore{spec, q.mean});
        }
        layer = select_layer(scores);
    } else {
        layer = parse_layer_spec(a.layer);
    }

    const auto selection = select_w(cfg.w_grid, [&](double w) {
        const DualConfig trial = make_dual_config(*provider, layer, w);
        const auto embedder = dual_embedder(*provider, trial);
        return std::pair{sample_modularity(pool, ModularityMode::vision, cfg.batch, embedder).mean,
                         sample_modularity(pool, ModularityMode::language, cfg.batch, embedder).mean};
    });
    const DualConfig fitted = make_dual_config(*provider, layer, selection.w);

    if (!a.report.empty()) {
        Output report(a.report, out);
        json layers = json::array();
        for (const auto& s : scores) layers.push_back({{"layer", to_string(s.layer)}, {"q_bimodal", s.q_bimodal}});
        json curve = json::array();
        for (const auto& p : selection.curve)
            curve.push_back({{"w", p.w},
                             {"q_vision", p.q_vision},
                             {"q_language", p.q_language},
                             {"score", finite_or_null(p.score)}});
        *report << json{{"layer", to_string(layer)}, {"w", selection.w}, {"layers", layers}, {"curve", curve}}.dump()
                << '\n';
    }
    Output sink(pick(a.common.out, cfg.paths.dual_config), out);
    *sink << to_json(fitted).dump(2) << '\n';
    return kOk;
}

// edit

struct EditArgs {
    Common common;
    std::string edits;
    std::string codebook;
    std::string dual;
    bool no_merge = false;
};

int run_edit(const EditArgs& a, std::ostream& out) {
    EngineConfig cfg = load_config(a.common);
    if (a.no_merge) cfg.merge_enabled = false;
    const DualConfig dual = load_dual(pick(a.dual, cfg.paths.dual_config));
    const std::string cb_path = pick(a.codebook, cfg.paths.codebook);
    if (cb_path.empty()) throw ArgumentError("no codebook path given");
    auto in = open_input(a.edits, "edits");
    const auto edits = parse_edits(in);

    Codebook cb = std::filesystem::exists(cb_path)
                      ? load_codebook(read_file_bytes(cb_path), dual, cfg.merge_enabled)
                      : Codebook(dual, cfg.merge_enabled);
    auto provider = make_provider(cfg.provider);
    check_manifest(*provider, dual);

    AddEditReport total;
    for (const auto& e : edits) {
        const auto r = add_edit(cb, e, *provider, cfg.edit_options());
        total.entries_added += r.entries_added;
        total.entries_merged += r.entries_merged;
        total.low_confidence_statements += r.low_confidence_statements;
    }
    write_file_bytes(cb_path, snapshot(cb));

    Output sink(a.common.out, out);
    *sink << json{{"edits_applied", edits.size()},
                  {"edit_count", cb.edit_count()},
                  {"entries", cb.entries().size()},
                  {"entries_added", total.entries_added},
                  {"entries_merged", total.entries_merged},
                  {"low_confidence_statements", total.low_confidence_statements},
                  {"radius_fallbacks", cb.stats().radius_fallbacks}}
                 .dump()
          << '\n';
    return kOk;
}

// query

struct QueryArgs {
    Common common;
    std::string queries;
    std::string codebook;
    std::string dual;
    RetrievalOverrides retrieval;
};

int run_query(const QueryArgs& a, std::ostream& out) {
    EngineConfig cfg = load_config(a.common);
    a.retrieval.apply(cfg);
    const DualConfig dual = load_dual(pick(a.dual, cfg.paths.dual_config));
    const std::string cb_path = pick(a.codebook, cfg.paths.codebook);
    if (cb_path.empty()) throw ArgumentError("no codebook path given");
    const Codebook cb = load_codebook(read_file_bytes(cb_path), dual, cfg.merge_enabled);
    auto in = open_input(a.queries, "queries");
    auto provider = make_provider(cfg.provider);
    check_manifest(*provider, dual);

    Output sink(pick(a.common.out, cfg.paths.output), out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            const QueryRecord q = query_from_json(json::parse(line));
            const auto query = embed_dual(*provider, dual, q.image_ref, std::nullopt, q.question);
            const auto result = retrieve(cb, query, cfg.retrieval);
            record = result_to_json(q.sample_id, result,
                                    assemble_prompt(result.sentences, q.question, cfg.prompt));
        } catch (const json::exception& e) {
            record = json{{"line", n}, {"error", std::string("malformed query: ") + e.what()}};
        } catch (const TransportError&) {
            throw;
        } catch (const Error& e) {
            record = json{{"line", n}, {"error", e.what()}};
        }
        *sink << record.dump() << '\n';
    }
    return kOk;
}

// eval

struct EvalArgs {
    Common common;
    std::string samples;
    std::string predictions;
    std::string codebook;
    std::string dual;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
    EngineConfig cfg = load_config(a.common);
    auto sample_in = open_input(a.samples, "eval");
    const auto samples = parse_eval_samples(sample_in);
    std::map<std::string, const EvalSample*> by_id;
    for (const auto& s : samples) by_id[s.sample_id] = &s;

    auto pred_in = open_input(a.predictions, "predictions");
    std::vector<PredictionRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t n = 0;
    while (std::getline(pred_in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(n, e.what());
        }
        try {
            const auto id = j.at("sample_id").get<std::string>();
            const auto it = by_id.find(id);
            if (it == by_id.end()) throw ValidationError("unknown sample_id '" + id + "'");
            if (!seen.insert(id).second) throw ValidationError("duplicate prediction for '" + id + "'");
            const EvalSample& s = *it->second;
            if (auto k = j.find("kind"); k != j.end() && parse_sample_kind(k->get<std::string>()) != s.kind)
                throw ValidationError("kind of '" + id + "' disagrees with the eval file");
            PredictionRecord r;
            r.sample_id = id;
            r.kind = s.kind;
            r.parent_edit_id = s.parent_edit_id;
            r.reference = s.reference_answer;
            r.predicted = j.at("predicted").get<std::string>();
            if (auto p = j.find("pre_edit_predicted"); p != j.end() && !p->is_null())
                r.pre_edit_predicted = p->get<std::string>();
            validate(r);
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ValidationError("line " + std::to_string(n) + ": " + e.what());
        } catch (const ArgumentError& e) {
            throw ValidationError("line " + std::to_string(n) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(n) + ": " + e.what());
        }
    }

    MetricReport report = compute_report(records, cfg.match);
    const std::string cb_path = pick(a.codebook, cfg.paths.codebook);
    if (!cb_path.empty()) {
        const Codebook cb = load_codebook(read_file_bytes(cb_path), load_dual(pick(a.dual, cfg.paths.dual_config)));
        if (cb.edit_count() > 0) report.storage_kb_per_edit = storage_per_edit(cb);
    }
    Output sink(pick(a.common.out, cfg.paths.output), out);
    *sink << to_json(report).dump() << '\n';
    return kOk;
}

// seq-run

struct SeqArgs {
    Common common;
    std::string stream;
    std::string pool;
    std::string dual;
    std::string codebook_out;
    bool no_merge = false;
    bool no_timing = false;
    CLI::Option* eval_every = nullptr;
    CLI::Option* batch = nullptr;
    CLI::Option* seed = nullptr;
    std::uint32_t eval_every_value = 0;
    std::uint32_t batch_value = 0;
    std::uint64_t seed_value = 0;
    RetrievalOverrides retrieval;
};

int run_seq(const SeqArgs& a, std::ostream& out, std::ostream& err) {
    EngineConfig cfg = load_config(a.common);
    a.retrieval.apply(cfg);
    if (a.no_merge) cfg.merge_enabled = false;
    if (a.eval_every->count()) cfg.sequential.eval_every = a.eval_every_value;
    if (a.batch->count()) cfg.sequential.batch = a.batch_value;
    if (a.seed->count()) cfg.sequential.seed = a.seed_value;
    cfg.validate();

    const DualConfig dual = load_dual(pick(a.dual, cfg.paths.dual_config));
    auto stream_in = open_input(a.stream, "edit stream");
    const auto edits = parse_edits(stream_in);
    std::vector<EvalSample> pool;
    if (!a.pool.empty()) {
        auto pool_in = open_input(a.pool, "eval pool");
        pool = parse_eval_samples(pool_in);
    }
    auto provider = make_provider(cfg.provider);
    check_manifest(*provider, dual);

    Codebook cb(dual, cfg.merge_enabled);
    MockAnswerer answerer(cfg.sequential.seed);
    SequentialConfig seq = cfg.sequential_config();
    seq.record_timing = !a.no_timing;
    const Trajectory traj = sequential_run(edits, pool, cb, *provider, answerer, seq);
    {
        Output sink(pick(a.common.out, cfg.paths.output), out);
        write_trajectory(*sink, traj);
    }
    if (!a.codebook_out.empty()) write_file_bytes(a.codebook_out, snapshot(cb));
    if (traj.failure) {
        err << "error: run stopped after " << traj.edits_applied << " edits: " << *traj.error << '\n';
        return exit_code_for(traj.failure);
    }
    return kOk;
}

// prep-locality

struct PrepArgs {
    Common common;
    std::string edits;
    std::string corpus;
    LocalityOptions options;
};

int run_prep(const PrepArgs& a, std::ostream& out) {
    auto edits_in = open_input(a.edits, "edits");
    const auto edits = parse_edits(edits_in);
    auto corpus_in = open_input(a.corpus, "corpus");
    const auto corpus = parse_eval_samples(corpus_in);
    const auto set = build_locality_set(edits, corpus, a.options);
    Output sink(a.common.out, out);
    write_eval_samples(*sink, set);
    return kOk;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config, "Engine config file (JSON)");
    app->add_option("-o,--out", c.out, "Output file (stdout when omitted)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval-based model editing engine", "reasonedit"};
    app.require_subcommand(1, 1);

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("topology-sweep", "Per-layer modularity and bias report");
    add_common(sweep_cmd, sweep.common);
    sweep_cmd->add_option("--pool", sweep.pool, "Pair pool (JSON lines of image_ref, text)");
    sweep_cmd->add_option("--block", sweep.block, "vision, merger or language");
    sweep_cmd->add_option("--pooling", sweep.pooling, "mean or last_token");
    sweep_cmd->add_option("--first", sweep.first, "First layer index");
    sweep_cmd->add_option("--last", sweep.last, "Last layer index (inclusive)");
    sweep.batch.attach(sweep_cmd);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit-dual", "Select the vision layer and text weight");
    add_common(fit_cmd, fit.common);
    fit_cmd->add_option("--pool", fit.pool, "Pair pool (JSON lines of image_ref, text)");
    fit_cmd->add_option("--layer", fit.layer, "Use this layer instead of sweeping, e.g. vision:2:mean");
    fit_cmd->add_option("--pooling", fit.pooling, "Pooling for the layer sweep");
    fit_cmd->add_option("--report", fit.report, "Write the layer scores and w curve here");
    fit.batch.attach(fit_cmd);

    EditArgs edit;
    auto* edit_cmd = app.add_subcommand("edit", "Apply edits to a codebook snapshot");
    add_common(edit_cmd, edit.common);
    edit_cmd->add_option("--edits", edit.edits, "Edits file (JSON lines)")->required();
    edit_cmd->add_option("--codebook", edit.codebook, "Codebook snapshot, created when missing");
    edit_cmd->add_option("--dual", edit.dual, "Dual config file");
    edit_cmd->add_flag("--no-merge", edit.no_merge, "Disable key merging");

    QueryArgs query;
    auto* query_cmd = app.add_subcommand("query", "Retrieve context for queries");
    add_common(query_cmd, query.common);
    query_cmd->add_option("--queries", query.queries, "Queries file (JSON lines)")->required();
    query_cmd->add_option("--codebook", query.codebook, "Codebook snapshot");
    query_cmd->add_option("--dual", query.dual, "Dual config file");
    query.retrieval.attach(query_cmd);

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against an eval set");
    add_common(eval_cmd, eval.common);
    eval_cmd->add_option("--samples", eval.samples, "Eval samples (JSON lines)")->required();
    eval_cmd->add_option("--predictions", eval.predictions, "Predictions (JSON lines)")->required();
    eval_cmd->add_option("--codebook", eval.codebook, "Codebook snapshot for storage per edit");
    eval_cmd->add_option("--dual", eval.dual, "Dual config file");

    SeqArgs seq;
    auto* seq_cmd = app.add_subcommand("seq-run", "Sequential editing with periodic evaluation");
    add_common(seq_cmd, seq.common);
    seq_cmd->add_option("--stream", seq.stream, "Edit stream (JSON lines)")->required();
    seq_cmd->add_option("--pool", seq.pool, "Eval samples (JSON lines)");
    seq_cmd->add_option("--dual", seq.dual, "Dual config file");
    seq_cmd->add_option("--save-codebook", seq.codebook_out, "Write the final codebook snapshot");
    seq_cmd->add_flag("--no-merge", seq.no_merge, "Disable key merging");
    seq_cmd->add_flag("--no-timing", seq.no_timing, "Report zero seconds per edit");
    seq.eval_every = seq_cmd->add_option("--eval-every", seq.eval_every_value, "Edits between evaluations");
    seq.batch = seq_cmd->add_option("--eval-batch", seq.batch_value, "Accumulated edits per evaluation");
    seq.seed = seq_cmd->add_option("--seed", seq.seed_value, "Evaluation batch seed");
    seq.retrieval.attach(seq_cmd);

    PrepArgs prep;
    auto* prep_cmd = app.add_subcommand("prep-locality", "Build the unrelated-sample set");
    add_common(prep_cmd, prep.common);
    prep_cmd->add_option("--edits", prep.edits, "Edits file (JSON lines)")->required();
    prep_cmd->add_option("--corpus", prep.corpus, "Correctly answered samples (JSON lines)")->required();
    prep_cmd->add_option("--random", prep.options.random_count, "Random samples");
    prep_cmd->add_option("--similar", prep.options.similar_count, "Word-overlap samples");
    prep_cmd->add_option("--per-edit", prep.options.per_edit, "Similar samples per edit");
    prep_cmd->add_option("--seed", prep.options.seed, "Sampling seed");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    try {
        if (sweep_cmd->parsed()) return run_sweep(sweep, out);
        if (fit_cmd->parsed()) return run_fit(fit, out);
        if (edit_cmd->parsed()) return run_edit(edit, out);
        if (query_cmd->parsed()) return run_query(query, out);
        if (eval_cmd->parsed()) return run_eval(eval, out);
        if (seq_cmd->parsed()) return run_seq(seq, out, err);
        if (prep_cmd->parsed()) return run_prep(prep, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(std::current_exception());
    }
    return kInputError;
}

}  // namespace reasonedit::cli
