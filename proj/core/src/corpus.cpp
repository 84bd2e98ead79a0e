// SPDX-License-Identifier: Apache-2.0
#include "repoqa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <regex>
#include <set>

#include "repoqa/assets.hpp"
#include "repoqa/errors.hpp"
#include "repoqa/jsonl.hpp"

namespace repoqa::corpus {

using nlohmann::json;

IssueDoc IssueDoc::make(std::string repo, const std::string& title,
                        const std::string& body) {
  IssueDoc doc;
  doc.repo = std::move(repo);
  doc.text = title;
  if (!title.empty() && !body.empty()) doc.text += "\n";
  doc.text += body;
  doc.byte_length = doc.text.size();
  return doc;
}

json qa_item_to_json(const QaItem& item) {
  json evidence = json::array();
  for (const EvidenceSpan& span : item.evidence)
    evidence.push_back({{"path", span.path},
                        {"line_start", span.line_start},
                        {"line_end", span.line_end}});
  json j = {{"id", item.id},
            {"repo", item.repo},
            {"commit_id", item.commit_id},
            {"question", item.question},
            {"reference_answer", item.reference_answer},
            {"cluster_id", item.cluster_id},
            {"qa_type",
             {{"class", item.qa_type.interrogative},
              {"intention", item.qa_type.intention}}},
            {"evidence", evidence}};
  if (item.difficulty) j["difficulty"] = *item.difficulty;
  return j;
}

QaItem qa_item_from_json(const json& j) {
  QaItem item;
  item.id = j.value("id", "");
  item.repo = j.value("repo", "");
  item.commit_id = j.value("commit_id", "");
  item.question = j.value("question", "");
  item.reference_answer = j.value("reference_answer", "");
  item.cluster_id = j.value("cluster_id", "");
  if (j.contains("qa_type")) {
    item.qa_type.interrogative = j["qa_type"].value("class", "");
    item.qa_type.intention = j["qa_type"].value("intention", "");
  }
  for (const json& e : j.value("evidence", json::array())) {
    EvidenceSpan span;
    span.path = e.value("path", "");
    span.line_start = e.value("line_start", 0);
    span.line_end = e.value("line_end", 0);
    if (span.line_start > span.line_end)
      throw CorpusError("evidence span start > end for item " + item.id);
    item.evidence.push_back(std::move(span));
  }
  if (j.contains("difficulty")) item.difficulty = j["difficulty"].get<double>();
  return item;
}

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

Taxonomy Taxonomy::load() {
  const json data = json::parse(assets::load("taxonomy.json"));
  Taxonomy taxonomy;
  for (const json& cls : data["classes"]) {
    for (const json& sub : cls["subclasses"]) {
      taxonomy.subclasses.push_back(
          {sub["id"].get<std::string>(), sub["label"].get<std::string>(),
           cls["id"].get<std::string>()});
    }
  }
  for (const json& qt : data["qa_types"]) {
    taxonomy.qa_types.push_back(
        {qt["class"].get<std::string>(), qt["intention"].get<std::string>()});
  }
  return taxonomy;
}

bool Taxonomy::has_cluster(const std::string& id) const {
  return std::any_of(subclasses.begin(), subclasses.end(),
                     [&](const Subclass& s) { return s.id == id; });
}

bool Taxonomy::has_qa_type(const QaType& type) const {
  return std::any_of(qa_types.begin(), qa_types.end(), [&](const QaType& t) {
    return t.interrogative == type.interrogative && t.intention == type.intention;
  });
}

std::string Taxonomy::cluster_label(const std::string& id) const {
  for (const Subclass& s : subclasses)
    if (s.id == id) return s.label;
  return "";
}

std::string Taxonomy::render_clusters() const {
  std::string out;
  for (const Subclass& s : subclasses)
    out += s.id + ": " + s.label + "\n";
  return out;
}

std::string Taxonomy::render_qa_types() const {
  std::string out;
  for (const QaType& t : qa_types)
    out += t.interrogative + " / " + t.intention + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Issue filtering
// ---------------------------------------------------------------------------

std::vector<IssueDoc> filter_issues(const std::vector<IssueDoc>& docs) {
  std::vector<IssueDoc> kept;
  kept.reserve(docs.size());
  for (const IssueDoc& doc : docs) {
    if (doc.byte_length >= kMinIssueBytes && doc.byte_length <= kMaxIssueBytes)
      kept.push_back(doc);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// K-means
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> normalize_all(
    const std::vector<gateway::EmbeddingVector>& vectors) {
  std::vector<std::vector<double>> out;
  out.reserve(vectors.size());
  for (const gateway::EmbeddingVector& v : vectors) {
    std::vector<double> x = v.values;
    double norm = 0;
    for (double c : x) norm += c * c;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& c : x) c /= norm;
    out.push_back(std::move(x));
  }
  return out;
}

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

/// Seeded k-means++ seeding over the normalized points.
std::vector<std::vector<double>> kmeanspp_init(
    const std::vector<std::vector<double>>& points, std::size_t k,
    std::mt19937_64& rng) {
  std::vector<std::vector<double>> centroids;
  std::uniform_int_distribution<std::size_t> uniform(0, points.size() - 1);
  centroids.push_back(points[uniform(rng)]);

  std::vector<double> dist(points.size());
  while (centroids.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids)
        best = std::min(best, squared_distance(points[i], c));
      dist[i] = best;
      total += best;
    }
    if (total <= 0) {
      // all remaining points coincide with a centroid
      centroids.push_back(points[uniform(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(rng);
    std::size_t chosen = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      target -= dist[i];
      if (target <= 0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(points[chosen]);
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const std::vector<gateway::EmbeddingVector>& vectors,
                    std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  const std::size_t n = vectors.size();
  if (k == 0 || k > n)
    throw CorpusError("kmeans: k must satisfy 1 <= k <= n");
  const std::size_t dim = vectors.front().values.size();
  for (const auto& v : vectors)
    if (v.values.size() != dim)
      throw CorpusError("kmeans: vectors must share one dimension");

  const std::vector<std::vector<double>> points = normalize_all(vectors);
  std::mt19937_64 rng(seed);

  KMeansResult result;
  result.centroids = kmeanspp_init(points, k, rng);
  result.assignments.assign(n, 0);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignments[i] != best) {
        result.assignments[i] = best;
        changed = true;
      }
    }

    // recompute centroids; an emptied cluster takes the farthest point
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d)
        sums[result.assignments[i]][d] += points[i][d];
      ++counts[result.assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::size_t farthest = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = squared_distance(
              points[i], result.centroids[result.assignments[i]]);
          if (d > far_d) {
            far_d = d;
            farthest = i;
          }
        }
        result.centroids[c] = points[farthest];
        result.assignments[farthest] = c;
        changed = true;
      } else {
        for (std::size_t d = 0; d < dim; ++d)
          result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }

    double sse = 0;
    for (std::size_t i = 0; i < n; ++i)
      sse += squared_distance(points[i], result.centroids[result.assignments[i]]);
    result.sse_history.push_back(sse);

    if (!changed) break;
  }
  return result;
}

std::vector<ClusterNode> hierarchical_cluster(
    const std::vector<gateway::EmbeddingVector>& vectors, std::size_t layer1_k,
    std::size_t layer2_total, std::uint64_t seed) {
  if (vectors.size() < layer2_total)
    throw CorpusError("hierarchical_cluster: need at least " +
                      std::to_string(layer2_total) + " vectors");

  const KMeansResult top = kmeans(vectors, layer1_k, 100, seed);

  std::vector<std::vector<std::size_t>> members(layer1_k);
  for (std::size_t i = 0; i < top.assignments.size(); ++i)
    members[top.assignments[i]].push_back(i);

  // Proportional child allocation with every parent guaranteed >= 1,
  // largest-remainder rounding, capped at the parent's member count.
  const std::size_t extra = layer2_total - layer1_k;
  const double total_members = static_cast<double>(vectors.size());
  std::vector<std::size_t> child_counts(layer1_k, 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < layer1_k; ++c) {
    const double share =
        static_cast<double>(extra) * static_cast<double>(members[c].size()) /
        total_members;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    child_counts[c] += whole;
    assigned += whole;
    remainders.emplace_back(share - std::floor(share), c);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < extra; i = (i + 1) % remainders.size()) {
    ++child_counts[remainders[i].second];
    ++assigned;
  }
  // cap at member count and redistribute overflow deterministically
  for (std::size_t c = 0; c < layer1_k; ++c) {
    while (child_counts[c] > members[c].size()) {
      --child_counts[c];
      for (std::size_t other = 0; other < layer1_k; ++other) {
        if (child_counts[other] < members[other].size()) {
          ++child_counts[other];
          break;
        }
      }
    }
  }

  std::vector<ClusterNode> nodes;
  for (std::size_t c = 0; c < layer1_k; ++c) {
    ClusterNode parent;
    parent.layer = 1;
    parent.id = std::to_string(c);
    parent.members = members[c];
    nodes.push_back(parent);

    std::vector<gateway::EmbeddingVector> sub;
    sub.reserve(members[c].size());
    for (std::size_t i : members[c]) sub.push_back(vectors[i]);

    const KMeansResult child =
        kmeans(sub, child_counts[c], 100, seed + 1000 + c);
    std::vector<std::vector<std::size_t>> child_members(child_counts[c]);
    for (std::size_t i = 0; i < child.assignments.size(); ++i)
      child_members[child.assignments[i]].push_back(members[c][i]);

    for (std::size_t j = 0; j < child_counts[c]; ++j) {
      ClusterNode leaf;
      leaf.layer = 2;
      leaf.id = parent.id + "." + std::to_string(j);
      leaf.parent = parent.id;
      leaf.members = child_members[j];
      nodes.push_back(std::move(leaf));
    }
  }
  return nodes;
}

void apply_taxonomy_labels(std::vector<ClusterNode>& nodes,
                           const Taxonomy& taxonomy) {
  for (ClusterNode& node : nodes) {
    if (node.layer == 2) node.label = taxonomy.cluster_label(node.id);
  }
}

// ---------------------------------------------------------------------------
// Dedup
// ---------------------------------------------------------------------------

std::vector<QaItem> dedupe(const std::vector<QaItem>& items,
                           gateway::Embedder& embedder, double threshold) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw CorpusError("dedupe: threshold must be in (0,1]");
  if (items.empty()) return {};

  std::vector<QaItem> ordered = items;
  std::sort(ordered.begin(), ordered.end(),
            [](const QaItem& a, const QaItem& b) { return a.id < b.id; });

  std::vector<std::string> texts;
  texts.reserve(ordered.size());
  for (const QaItem& item : ordered) texts.push_back(item.question);
  const std::vector<gateway::EmbeddingVector> vectors = embedder.embed(texts);

  std::vector<QaItem> kept;
  std::vector<const gateway::EmbeddingVector*> kept_vectors;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    double max_sim = -1.0;
    for (const gateway::EmbeddingVector* kv : kept_vectors)
      max_sim = std::max(max_sim, gateway::cosine_similarity(vectors[i], *kv));
    if (max_sim < threshold) {
      kept.push_back(ordered[i]);
      kept_vectors.push_back(&vectors[i]);
    }
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Benchmark sampling
// ---------------------------------------------------------------------------

std::vector<QaItem> sample_benchmark(const std::vector<QaItem>& items,
                                     std::size_t per_cluster_min,
                                     std::size_t per_cluster_max,
                                     std::uint64_t seed) {
  std::map<std::string, std::vector<QaItem>> by_cluster;
  for (const QaItem& item : items) by_cluster[item.cluster_id].push_back(item);

  for (auto& [cluster, candidates] : by_cluster) {
    if (candidates.size() < per_cluster_min)
      throw CorpusError("cluster " + cluster + " has only " +
                        std::to_string(candidates.size()) +
                        " candidates (need >= " +
                        std::to_string(per_cluster_min) + ")");
    std::sort(candidates.begin(), candidates.end(),
              [](const QaItem& a, const QaItem& b) {
                const double da = a.difficulty.value_or(
                    -std::numeric_limits<double>::infinity());
                const double db = b.difficulty.value_or(
                    -std::numeric_limits<double>::infinity());
                if (da != db) return da > db;
                return a.id < b.id;
              });
  }

  std::vector<QaItem> selected;
  std::map<std::string, std::size_t> taken;       // per cluster
  std::map<std::string, std::size_t> class_load;  // per interrogative

  // the hardest per_cluster_min items from each cluster are always in
  for (const auto& [cluster, candidates] : by_cluster) {
    for (std::size_t i = 0; i < per_cluster_min; ++i) {
      selected.push_back(candidates[i]);
      ++class_load[candidates[i].qa_type.interrogative];
    }
    taken[cluster] = per_cluster_min;
  }

  // remaining slots fill in seeded cluster order, preferring candidates
  // whose interrogative class currently has the lowest global count
  std::vector<std::string> cluster_order;
  for (const auto& [cluster, candidates] : by_cluster)
    cluster_order.push_back(cluster);
  std::mt19937_64 rng(seed);
  std::shuffle(cluster_order.begin(), cluster_order.end(), rng);

  bool progress = true;
  while (progress) {
    progress = false;
    for (const std::string& cluster : cluster_order) {
      const std::vector<QaItem>& candidates = by_cluster[cluster];
      std::size_t& count = taken[cluster];
      if (count >= per_cluster_max || count >= candidates.size()) continue;

      std::size_t best = count;
      for (std::size_t i = count; i < candidates.size(); ++i) {
        if (class_load[candidates[i].qa_type.interrogative] <
            class_load[candidates[best].qa_type.interrogative])
          best = i;
      }
      // keep the difficulty ordering stable: swap the pick forward
      std::vector<QaItem>& mutable_candidates = by_cluster[cluster];
      std::swap(mutable_candidates[count], mutable_candidates[best]);
      selected.push_back(mutable_candidates[count]);
      ++class_load[mutable_candidates[count].qa_type.interrogative];
      ++count;
      progress = true;
    }
  }

  std::sort(selected.begin(), selected.end(),
            [](const QaItem& a, const QaItem& b) { return a.id < b.id; });
  return selected;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

std::string build_synthesis_prompt(const ClusterNode& cluster,
                                   const std::string& repo,
                                   const std::vector<IssueDoc>& issues,
                                   std::size_t sample_size,
                                   std::uint64_t seed) {
  if (issues.empty())
    throw CorpusError("build_synthesis_prompt: empty issue pool");

  std::vector<std::size_t> indices(issues.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(sample_size, indices.size()));
  std::sort(indices.begin(), indices.end());

  std::string reference_issues;
  for (std::size_t rank = 0; rank < indices.size(); ++rank) {
    reference_issues += "--- Issue " + std::to_string(rank + 1) + " ---\n";
    reference_issues += issues[indices[rank]].text;
    reference_issues += "\n";
  }

  const Taxonomy taxonomy = Taxonomy::load();
  std::string prompt = assets::load("synthesis_prompt.txt");
  prompt = assets::substitute(std::move(prompt), "cluster_taxonomy",
                              taxonomy.render_clusters());
  prompt = assets::substitute(std::move(prompt), "qa_type_taxonomy",
                              taxonomy.render_qa_types());
  prompt = assets::substitute(std::move(prompt), "cluster_id", cluster.id);
  prompt = assets::substitute(std::move(prompt), "cluster_label",
                              cluster.label.empty()
                                  ? taxonomy.cluster_label(cluster.id)
                                  : cluster.label);
  prompt = assets::substitute(std::move(prompt), "repo_name", repo);
  prompt = assets::substitute(std::move(prompt), "reference_issues",
                              reference_issues);
  return prompt;
}

std::size_t interrogative_count(const std::string& question) {
  static const std::regex words(R"(\b(what|why|where|how)\b)", std::regex::icase);
  return static_cast<std::size_t>(std::distance(
      std::sregex_iterator(question.begin(), question.end(), words),
      std::sregex_iterator()));
}

namespace {

std::optional<EvidenceSpan> parse_evidence_string(const std::string& text) {
  static const std::regex span(R"(^\s*(.+?)\s*:\s*line\s+(\d+)\s*-\s*(\d+)\s*$)");
  std::smatch match;
  if (!std::regex_match(text, match, span)) return std::nullopt;
  EvidenceSpan out;
  out.path = match[1];
  out.line_start = std::stoul(match[2]);
  out.line_end = std::stoul(match[3]);
  if (out.line_start > out.line_end) return std::nullopt;
  return out;
}

}  // namespace

SynthesisResult parse_synthesis_output(const std::string& reply,
                                       const Taxonomy& taxonomy) {
  SynthesisResult result;
  const auto maybe = jsonl::extract_first_object(reply);
  if (!maybe) {
    result.rejections.push_back("no JSON object in reply");
    return result;
  }
  const json& object = *maybe;

  QaItem item;
  item.question = object.contains("question") ? object.value("question", "")
                                              : object.value("query", "");
  item.reference_answer = object.value("ground_truth_answer", "");
  item.repo = object.value("repo", "");
  item.commit_id = object.value("commit_id", "");
  item.id = object.value("id", "");

  if (item.question.empty())
    result.rejections.push_back("missing question");
  else if (interrogative_count(item.question) != 1)
    result.rejections.push_back(
        "question must contain exactly one of What/Why/Where/How");

  if (item.reference_answer.empty())
    result.rejections.push_back("missing ground_truth_answer");

  // cluster: either "7.4" or [id, name]
  if (object.contains("cluster")) {
    const json& cluster = object["cluster"];
    if (cluster.is_string()) item.cluster_id = cluster.get<std::string>();
    else if (cluster.is_array() && !cluster.empty() && cluster[0].is_string())
      item.cluster_id = cluster[0].get<std::string>();
  }
  if (item.cluster_id.empty() || !taxonomy.has_cluster(item.cluster_id))
    result.rejections.push_back("unknown cluster label: " + item.cluster_id);

  const json type = object.contains("qa_type") ? object["qa_type"]
                                               : object.value("task_type", json());
  if (type.is_object()) {
    item.qa_type.interrogative = type.value("class", "");
    item.qa_type.intention = type.value("intention", "");
  }
  if (!taxonomy.has_qa_type(item.qa_type))
    result.rejections.push_back("unknown qa_type: " + item.qa_type.interrogative +
                                " / " + item.qa_type.intention);

  const json evidence = object.value("evidence", json::array());
  if (!evidence.is_array() || evidence.empty()) {
    result.rejections.push_back("missing evidence");
  } else {
    for (const json& e : evidence) {
      std::optional<EvidenceSpan> span;
      if (e.is_string()) {
        span = parse_evidence_string(e.get<std::string>());
      } else if (e.is_object() && e.contains("path")) {
        EvidenceSpan s;
        s.path = e.value("path", "");
        s.line_start = e.value("line_start", 0);
        s.line_end = e.value("line_end", 0);
        if (s.line_start >= 1 && s.line_start <= s.line_end) span = s;
      }
      if (!span) {
        result.rejections.push_back(
            "evidence entry lacks relevant line numbers or line ranges");
        break;
      }
      item.evidence.push_back(std::move(*span));
    }
  }

  if (result.rejections.empty()) result.item = std::move(item);
  return result;
}

}  // namespace repoqa::corpus
