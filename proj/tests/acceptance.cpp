// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "reasonedit/codebook.hpp"
#include "reasonedit/dual_embedding.hpp"
#include "reasonedit/errors.hpp"
#include "reasonedit/eval_harness.hpp"
#include "reasonedit/mock_provider.hpp"
#include "reasonedit/retrieval.hpp"
#include "reasonedit/rng.hpp"
#include "reasonedit/similarity_network.hpp"
#include "reasonedit/topology.hpp"
#include "support.hpp"

using namespace reasonedit;

namespace {

// Thrown by check() to fail the current criterion with a message.
struct Failure {
    std::string what;
};

void check(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<std::string()>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
        detail = body();
    } catch (const Failure& f) {
        ok = false;
        detail = f.what;
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && time_limit_s > 0 && secs >= time_limit_s) {
        ok = false;
        detail = "took " + num(secs) + " s, limit " + num(time_limit_s) + " s";
    }
    if (!ok) ++failures;
    std::printf("%s %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), secs, detail.empty() ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
}

Partition random_partition(Rng& rng, std::size_t n) {
    const std::size_t k = 1 + rng.below(n);
    std::vector<std::size_t> raw(n);
    for (auto& l : raw) l = rng.below(k);
    // Relabel to contiguous ids in order of first appearance.
    std::map<std::size_t, std::size_t> ids;
    Partition p;
    for (auto l : raw) p.labels.push_back(ids.try_emplace(l, ids.size()).first->second);
    return p;
}

std::string modularity_oracle() {
    Rng rng(2024);
    double worst = 0.0, worst_single = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(7);  // 2..8
        const auto pts = testing::random_points(rng, n, 1 + rng.below(6));
        const auto net = build_adjacency(pts);
        const auto part = random_partition(rng, n);
        const double q = modularity(net, part);
        worst = std::max(worst, std::abs(q - testing::brute_modularity(testing::dense(net), part.labels)));
        Partition single{std::vector<std::size_t>(n, 0)};
        worst_single = std::max(worst_single, std::abs(modularity(net, single)));
    }
    check(worst <= 1e-12, "max |Q - oracle| = " + num(worst));
    check(worst_single <= 1e-12, "single-cluster |Q| = " + num(worst_single));
    return "max |Q - oracle| = " + num(worst) + ", single-cluster max |Q| = " + num(worst_single);
}

std::string invariance() {
    Rng rng(77);
    double worst_adj = 0.0, worst_q = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng.below(30);
        const auto pts = testing::random_points(rng, n, 8);
        const double alpha = std::exp(rng.uniform() * 9.0 - 4.5);
        auto scaled = pts;
        for (auto& p : scaled)
            for (auto& x : p) x *= alpha;
        const auto a = build_adjacency(pts);
        const auto b = build_adjacency(scaled);
        for (std::size_t i = 0; i < a.adjacency.size(); ++i)
            worst_adj = std::max(worst_adj, std::abs(a.adjacency[i] - b.adjacency[i]));
    }
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng.below(30);
        const auto net = build_adjacency(testing::random_points(rng, n, 8));
        const auto part = random_partition(rng, n);
        const double c = std::exp(rng.uniform() * 9.0 - 4.5);
        auto weighted = net;
        for (auto& w : weighted.adjacency) w *= c;
        worst_q = std::max(worst_q, std::abs(modularity(net, part) - modularity(weighted, part)));
    }
    check(worst_adj <= 1e-9, "adjacency drift " + num(worst_adj));
    check(worst_q <= 1e-12, "Q drift " + num(worst_q));
    return "adjacency drift " + num(worst_adj) + ", Q drift " + num(worst_q);
}

std::string combinatorics() {
    MockProvider mock;
    for (std::uint64_t n = 2; n <= 20; ++n) {
        const auto batch = testing::pair_pool(n);
        for (const auto& set : {build_vision_nodes(batch), build_language_nodes(batch)}) {
            const auto c = within_cluster_pairs(set.partition);
            // within / total == 1 / (n + 1), checked in integers.
            check(c.within * (n + 1) == c.total, "pair fraction wrong at n=" + std::to_string(n));
        }
        const auto bi = build_bimodal_nodes(batch, mock);
        check(bi.nodes.size() == n + 4 * n * (n - 1), "bimodal node count wrong at n=" + std::to_string(n));
        check(bimodal_node_count(n) == bi.nodes.size(), "bimodal_node_count disagrees at n=" + std::to_string(n));
    }
    return "n = 2..20";
}

std::string bias_signs() {
    const auto pool = testing::pair_pool(100);
    std::vector<std::string> texts, images;
    for (const auto& p : pool) {
        texts.push_back(p.text);
        images.push_back(p.image_ref);
    }
    BatchSpec spec;
    spec.n = 10;
    spec.batches = 10;
    spec.seed = 17;
    const LayerSpec layer{Block::vision, 0, Pooling::mean};
    auto run = [&](double image, double text) {
        MockConfig cfg;
        cfg.vision = {{image, text}};
        cfg.aug_noise = 0.5;
        MockProvider mock(cfg);
        const auto emb = layer_embedder(mock, layer);
        struct {
            double bv, bl, qv, ql;
        } r{vision_bias(pool, spec, emb, texts, mock).mean, language_bias(pool, spec, emb, images, mock).mean,
            sample_modularity(pool, ModularityMode::vision, spec, emb).mean,
            sample_modularity(pool, ModularityMode::language, spec, emb).mean};
        return r;
    };
    const auto img = run(4.0, 0.1);
    check(img.bv > 0 && img.bl < 0 && img.qv > img.ql,
          "image-dominated: bias_vis " + num(img.bv) + ", bias_lang " + num(img.bl) + ", Q_vis " + num(img.qv) +
              ", Q_lang " + num(img.ql));
    const auto txt = run(0.1, 4.0);
    check(txt.bv < 0 && txt.bl > 0 && txt.qv < txt.ql,
          "text-dominated: bias_vis " + num(txt.bv) + ", bias_lang " + num(txt.bl) + ", Q_vis " + num(txt.qv) +
              ", Q_lang " + num(txt.ql));
    return "image-dominated (" + num(img.bv) + ", " + num(img.bl) + ", " + num(img.qv) + " > " + num(img.ql) +
           "); text-dominated (" + num(txt.bv) + ", " + num(txt.bl) + ", " + num(txt.qv) + " < " + num(txt.ql) + ")";
}

std::string dual_tradeoff() {
    // The vision layer sees only the image; the sentence block adds text.
    MockConfig cfg;
    cfg.vision = {{1.0, 0.0}};
    MockProvider mock(cfg);
    const auto pool = testing::pair_pool(60);
    BatchSpec spec;
    spec.n = 8;
    spec.batches = 6;
    spec.seed = 3;
    const LayerSpec layer{Block::vision, 0, Pooling::mean};
    const auto grid = default_w_grid();
    const auto sel = select_w(grid, [&](double w) {
        const auto emb = dual_embedder(mock, make_dual_config(mock, layer, w));
        return std::pair{sample_modularity(pool, ModularityMode::vision, spec, emb).mean,
                         sample_modularity(pool, ModularityMode::language, spec, emb).mean};
    });
    for (std::size_t i = 1; i < sel.curve.size(); ++i) {
        check(sel.curve[i].q_vision < sel.curve[i - 1].q_vision, "Q_vis not strictly decreasing at w=" + num(sel.curve[i].w));
        check(sel.curve[i].q_language > sel.curve[i - 1].q_language,
              "Q_lang not strictly increasing at w=" + num(sel.curve[i].w));
    }
    check(sel.w > grid.front() && sel.w < grid.back(), "argmax on the boundary: w=" + num(sel.w));
    // Unimodal: scores rise to the peak, then fall.
    std::size_t peak = 0;
    for (std::size_t i = 0; i < sel.curve.size(); ++i)
        if (sel.curve[i].score > sel.curve[peak].score) peak = i;
    for (std::size_t i = 1; i <= peak; ++i)
        check(sel.curve[i].score >= sel.curve[i - 1].score, "curve dips before the peak at w=" + num(sel.curve[i].w));
    for (std::size_t i = peak + 1; i < sel.curve.size(); ++i)
        check(sel.curve[i].score <= sel.curve[i - 1].score, "curve rises after the peak at w=" + num(sel.curve[i].w));
    return "w* = " + num(sel.w) + ", score " + num(sel.curve[peak].score);
}

// 500 edits over 250 images. Each image gets two edits; the second repeats
// the first one's first statement, and for 50 images its second statement
// too, so 300 of the 1000 statements are exact duplicates.
std::vector<Edit> duplicate_stream() {
    std::vector<Edit> edits;
    for (int m = 0; m < 250; ++m) {
        const std::string image = "photo" + std::to_string(m);
        const std::string s0 = "statement " + std::to_string(m) + " a";
        const std::string s1 = "statement " + std::to_string(m) + " b";
        Edit first = testing::make_edit("e" + std::to_string(2 * m), image, {s0, s1});
        first.question = "First question about " + image + "?";
        Edit second = testing::make_edit("e" + std::to_string(2 * m + 1), image,
                                         {s0, m < 50 ? s1 : "statement " + std::to_string(m) + " c"});
        second.question = "Second question about " + image + "?";
        edits.push_back(std::move(first));
        edits.push_back(std::move(second));
    }
    return edits;
}

std::string merge_ablation() {
    MockConfig cfg;
    cfg.default_p_yes = 0.8;
    MockProvider mock(cfg);
    const auto dual = make_dual_config(mock, LayerSpec{Block::vision, 0, Pooling::mean}, 1.0);
    const auto stream = duplicate_stream();
    std::size_t statements = 0, duplicates = 0;
    {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& e : stream)
            for (const auto& s : e.reasoning) {
                ++statements;
                if (!seen.emplace(e.image_ref, s).second) ++duplicates;
            }
    }
    check(statements == 1000 && duplicates == 300, "stream has " + std::to_string(duplicates) + "/" +
                                                       std::to_string(statements) + " duplicates");
    Codebook merged(dual, true);
    Codebook plain(dual, false);
    double worst = 0.0;
    std::size_t checkpoints = 0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        add_edit(merged, stream[i], mock);
        add_edit(plain, stream[i], mock);
        if ((i + 1) % 50 != 0) continue;
        const double ratio = storage_per_edit(merged) / storage_per_edit(plain);
        ++checkpoints;
        worst = std::max(worst, ratio);
        check(ratio <= 0.9, "ratio " + num(ratio) + " at step " + std::to_string(i + 1));
    }
    return std::to_string(checkpoints) + " checkpoints, worst ratio " + num(worst) + " (final " +
           num(storage_per_edit(merged) / storage_per_edit(plain)) + ", merges " +
           std::to_string(merged.stats().merges) + ")";
}

Codebook random_codebook(Rng& rng, std::size_t n, std::size_t dim, double scale = 1.0) {
    DualConfig c;
    c.vision_dim = static_cast<std::uint32_t>(dim - 1);
    c.text_dim = 1;
    Codebook cb(c, false);
    for (std::size_t i = 0; i < n; ++i) {
        CodebookEntry e;
        e.key.values.resize(dim);
        for (auto& x : e.key.values) x = scale * rng.normal();
        e.radius = 1.0;
        e.values = {"sentence " + std::to_string(i)};
        e.provenance.push_back({"e" + std::to_string(i), EntryKind::answer, -1, std::nullopt});
        cb.insert(std::move(e));
    }
    return cb;
}

std::string retrieval_correctness() {
    Rng rng(31);
    const auto cb = random_codebook(rng, 1000, 12);
    // Brute-force neighbors.
    for (int t = 0; t < 200; ++t) {
        std::vector<double> q(12);
        for (auto& x : q) x = rng.normal();
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < cb.entries().size(); ++i)
            all.emplace_back(euclidean_distance(cb.entries()[i].key.values, q), i);
        std::sort(all.begin(), all.end());
        for (std::uint32_t k : {1u, 5u, 20u}) {
            const auto nn = nearest_neighbors(cb, EmbeddingVector{q, {}}, k);
            std::set<std::size_t> got, want;
            for (const auto& n : nn) got.insert(n.entry);
            for (std::size_t i = 0; i < k; ++i) want.insert(all[i].second);
            check(got == want, "neighbor set mismatch for k=" + std::to_string(k));
        }
    }

    // Rejection fires iff min distance exceeds the nearest-rank percentile.
    Rng rng2(8);
    const auto small = random_codebook(rng2, 300, 4);
    std::vector<double> pairwise;
    for (std::size_t i = 0; i < small.entries().size(); ++i)
        for (std::size_t j = i + 1; j < small.entries().size(); ++j)
            pairwise.push_back(euclidean_distance(small.entries()[i].key.values, small.entries()[j].key.values));
    std::sort(pairwise.begin(), pairwise.end());
    std::size_t rejected = 0;
    for (double p : {10.0, 50.0, 90.0}) {
        const double threshold =
            pairwise[static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(pairwise.size()))) - 1];
        for (int t = 0; t < 200; ++t) {
            std::vector<double> q(4);
            for (auto& x : q) x = 3.0 * rng2.normal();
            double min_d = std::numeric_limits<double>::infinity();
            for (const auto& e : small.entries()) min_d = std::min(min_d, euclidean_distance(e.key.values, q));
            const auto r = retrieve(small, EmbeddingVector{q, {}}, RetrievalConfig{5, p});
            check(r.threshold == threshold, "threshold mismatch at p=" + num(p));
            check(r.retrieved == !(min_d > threshold), "rejection rule mismatch");
            rejected += r.retrieved ? 0 : 1;
        }
    }

    // Hand-built fixture: keys at 0, 1, 3 give pairwise {1, 3, 2}.
    DualConfig c2;
    c2.vision_dim = 1;
    c2.text_dim = 1;
    Codebook fix(c2, false);
    for (double x : {0.0, 1.0, 3.0}) {
        CodebookEntry e;
        e.key.values = {x, 0.0};
        e.radius = 1.0;
        e.values = {"v" + num(x)};
        e.provenance.push_back({"e", EntryKind::answer, -1, std::nullopt});
        fix.insert(std::move(e));
    }
    check(rejection_threshold(fix, 50) == 2.0, "fixture threshold " + num(rejection_threshold(fix, 50)));
    check(retrieve(fix, EmbeddingVector{{-2.0, 0.0}, {}}).retrieved, "distance 2 rejected");
    check(!retrieve(fix, EmbeddingVector{{-2.001, 0.0}, {}}).retrieved, "distance 2.001 retrieved");

    // Global scaling leaves every decision and neighbor list unchanged.
    Rng rng3(12);
    const auto base_keys = random_codebook(rng3, 400, 6);
    std::vector<std::vector<double>> queries;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> q(6);
        for (auto& x : q) x = 2.0 * rng3.normal();
        queries.push_back(q);
    }
    for (double s : {1.0 / 1024, 0.25, 2.0, 8.0, 4096.0}) {
        Codebook scaled(base_keys.config(), false);
        for (auto e : base_keys.entries()) {
            for (auto& x : e.key.values) x *= s;
            scaled.insert(std::move(e));
        }
        for (const auto& q : queries) {
            auto sq = q;
            for (auto& x : sq) x *= s;
            const auto a = retrieve(base_keys, EmbeddingVector{q, {}});
            const auto b = retrieve(scaled, EmbeddingVector{sq, {}});
            check(a.retrieved == b.retrieved && a.sentences == b.sentences, "decision changed under scale " + num(s));
        }
    }
    return "KNN exact on 1000 entries, " + std::to_string(rejected) + "/600 random queries rejected, fixture threshold 2";
}

std::string end_to_end() {
    MockConfig cfg;
    cfg.default_p_yes = 0.8;
    for (int f = 0; f < 50; ++f) cfg.image_scale["far" + std::to_string(f)] = 10.0;
    MockProvider mock(cfg);
    const auto dual = make_dual_config(mock, LayerSpec{Block::vision, 0, Pooling::mean}, 1.0);
    Codebook cb(dual);
    std::vector<Edit> edits;
    for (int i = 0; i < 20; ++i) {
        Edit e = testing::make_edit("edit" + std::to_string(i), "scene" + std::to_string(i),
                                    {"scene " + std::to_string(i) + " has a marker", "the marker is colored"});
        e.answer = "label" + std::to_string(i);
        edits.push_back(e);
        add_edit(cb, e, mock);
    }
    // Separation: every answer key is farther from other answer keys than any radius.
    double max_radius = 0.0, min_gap = std::numeric_limits<double>::infinity();
    std::vector<const CodebookEntry*> answers;
    for (const auto& e : cb.entries())
        if (e.provenance[0].kind == EntryKind::answer) answers.push_back(&e);
    check(answers.size() == 20, "expected 20 answer entries");
    for (std::size_t i = 0; i < answers.size(); ++i) {
        max_radius = std::max(max_radius, answers[i]->radius);
        for (std::size_t j = i + 1; j < answers.size(); ++j)
            min_gap = std::min(min_gap, euclidean_distance(answers[i]->key.values, answers[j]->key.values));
    }
    check(min_gap > 10.0 * max_radius, "clusters not separated: gap " + num(min_gap) + ", radius " + num(max_radius));

    auto has_answer = [](const RetrievalResult& r, const Edit& e) {
        const auto target = answer_sentence(e.question, e.answer);
        return r.retrieved && std::find(r.sentences.begin(), r.sentences.end(), target) != r.sentences.end();
    };
    Rng rng(4);
    std::size_t own = 0, perturbed = 0, far_rejected = 0, far_total = 0;
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const auto q = embed_dual(mock, dual, edits[i].image_ref, std::nullopt, edits[i].question);
        own += has_answer(retrieve(cb, q), edits[i]);
        // Random offset at half the entry radius.
        const CodebookEntry& entry = *answers[i];
        for (int t = 0; t < 5; ++t) {
            std::vector<double> dir(q.dim());
            double norm = 0.0;
            for (auto& x : dir) {
                x = rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            auto pq = entry.key;
            for (std::size_t k = 0; k < dir.size(); ++k) pq.values[k] += 0.5 * entry.radius * dir[k] / norm;
            perturbed += has_answer(retrieve(cb, pq), edits[i]);
        }
    }
    for (int f = 0; f < 50; ++f) {
        const auto q = embed_dual(mock, dual, "far" + std::to_string(f), std::nullopt,
                                  "Unrelated question number " + std::to_string(f) + "?");
        far_rejected += retrieve(cb, q).retrieved ? 0 : 1;
        ++far_total;
    }
    const double rel = own / 20.0, gen = perturbed / 100.0, loc = static_cast<double>(far_rejected) / far_total;
    check(rel == 1.0, "reliability proxy " + num(rel));
    check(gen == 1.0, "generality proxy " + num(gen));
    check(loc == 1.0, "locality proxy " + num(loc));
    return "reliability 1, generality 1, locality 1 (" + std::to_string(cb.entries().size()) + " entries)";
}

std::string metric_exactness() {
    const auto records = testing::metric_fixture();
    check(records.size() == 24, "fixture size");
    const auto report = compute_report(records);
    for (std::size_t k = 0; k < 6; ++k) {
        const auto v = report.value(kAllSampleKinds[k]);
        check(v && *v == testing::kMetricFixtureExpected[k],
              std::string(metric_name(kAllSampleKinds[k])) + " = " + (v ? num(*v) : "absent"));
    }

    // Unedited model: empty codebook, answers pass through unchanged.
    MockProvider mock;
    Codebook empty(make_dual_config(mock, LayerSpec{Block::vision, 0, Pooling::mean}, 1.0));
    std::vector<EvalSample> unrelated;
    for (int i = 0; i < 50; ++i) {
        EvalSample s;
        s.sample_id = "u" + std::to_string(i);
        s.kind = SampleKind::unrelated;
        s.image_ref = "img" + std::to_string(i);
        s.question = "How many objects are there?";
        s.reference_answer = "2";
        s.candidates = {"1", "2", "3", "4"};
        unrelated.push_back(s);
    }
    MockAnswerer answerer(5);
    const auto loc = compute_report(predict(empty, mock, answerer, unrelated, {}, {})).value(SampleKind::unrelated);
    check(loc && *loc == 1.0, "unedited locality " + (loc ? num(*loc) : "absent"));
    return "24 records exact, unedited locality 1.00";
}

std::string error_chain_oracle() {
    std::size_t families = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<std::string> statements;
        for (std::size_t i = 0; i < n; ++i) statements.push_back("claim" + std::to_string(i + 1));
        const Edit edit = testing::make_edit("e", "img", statements);
        const std::uint32_t subsets = (1u << n) - 1;
        // Every family of failing subsets: bit (mask - 1) marks subset `mask`.
        const std::uint64_t family_count = std::uint64_t{1} << subsets;
        for (std::uint64_t family = 0; family < family_count; ++family) {
            MockConfig cfg;
            cfg.default_p_yes = 0.95;
            std::set<std::size_t> expected;
            for (std::uint32_t mask = 1; mask <= subsets; ++mask) {
                if (!(family >> (mask - 1) & 1)) continue;
                std::string joined;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask >> i & 1) {
                        joined += (joined.empty() ? "" : " ") + statements[i];
                        expected.insert(i);
                    }
                cfg.p_yes[joined] = 0.05;
            }
            MockProvider oracle(cfg);
            const auto chain = error_chain(edit, oracle, "img");
            std::vector<std::string> want;
            for (auto i : expected) want.push_back(statements[i]);
            check(chain.sentences == want, "chain mismatch at n=" + std::to_string(n));
            check(chain.subset_count_checked == subsets, "subset count at n=" + std::to_string(n));
            ++families;
        }
    }
    return std::to_string(families) + " failing-subset families";
}

}  // namespace

int main() {
    criterion("modularity oracle: 200 networks, N <= 8, |Q - brute force| <= 1e-12", 5, modularity_oracle);
    criterion("invariance: embedding scale and weight scale, 100 trials each", 5, invariance);
    criterion("combinatorics: pair fraction 1/(n+1) and bimodal node count, n = 2..20", 0, combinatorics);
    criterion("bias and modularity signs on planted mocks, B = 10, n = 10", 60, bias_signs);
    criterion("dual-embedding trade-off: interior argmax, unimodal curve", 0, dual_tradeoff);
    criterion("merge ablation: merged storage <= 0.9x unmerged at every checkpoint", 120, merge_ablation);
    criterion("retrieval: brute-force KNN, percentile rejection, scale invariance", 0, retrieval_correctness);
    criterion("end-to-end planted editing: reliability, generality, locality proxies = 1", 60, end_to_end);
    criterion("metric harness: 24-record fixture and unedited locality", 0, metric_exactness);
    criterion("error chain: union of failing subsets, N = 1..4", 0, error_chain_oracle);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
