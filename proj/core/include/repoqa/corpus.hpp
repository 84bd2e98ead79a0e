// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repoqa/gateway.hpp"

namespace repoqa::corpus {

/// Issue text used as a question seed: concatenated title + body.
struct IssueDoc {
  std::string repo;
  std::string text;
  std::size_t byte_length = 0;

  static IssueDoc make(std::string repo, const std::string& title,
                       const std::string& body);
};

/// Node of the two-layer issue taxonomy.
struct ClusterNode {
  int layer = 1;                 // 1 or 2
  std::string id;                // "7" or "7.4"
  std::string label;
  std::vector<std::size_t> members;  // document indices
  std::optional<std::string> parent;
};

struct QaType {
  std::string interrogative;  // What / Why / Where / How
  std::string intention;      // one of the 12-entry taxonomy
};

struct EvidenceSpan {
  std::string path;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
};

struct QaItem {
  std::string id;
  std::string repo;
  std::string commit_id;
  std::string question;
  std::string reference_answer;
  std::string cluster_id;  // leaf label, e.g. "7.4"
  QaType qa_type;
  std::vector<EvidenceSpan> evidence;
  std::optional<double> difficulty;
};

nlohmann::json qa_item_to_json(const QaItem& item);
QaItem qa_item_from_json(const nlohmann::json& j);

/// The shipped taxonomy: 10 top-level classes, 48 leaf subclasses, and
/// the 12 question intentions.
struct Taxonomy {
  struct Subclass {
    std::string id;
    std::string label;
    std::string parent_id;
  };
  std::vector<Subclass> subclasses;
  std::vector<QaType> qa_types;

  static Taxonomy load();

  bool has_cluster(const std::string& id) const;
  bool has_qa_type(const QaType& type) const;
  std::string cluster_label(const std::string& id) const;
  std::string render_clusters() const;
  std::string render_qa_types() const;
};

// ---------------------------------------------------------------------------
// Issue filtering and clustering
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMinIssueBytes = 10;
inline constexpr std::size_t kMaxIssueBytes = 16'384;

/// Keeps issues whose text is between 10 bytes and 16 KiB, order preserved.
std::vector<IssueDoc> filter_issues(const std::vector<IssueDoc>& docs);

struct KMeansResult {
  std::vector<std::size_t> assignments;           // per vector
  std::vector<std::vector<double>> centroids;     // k x dim
  std::vector<double> sse_history;                // SSE after each iteration
};

/// Lloyd iterations from seeded k-means++ initialization over
/// length-normalized copies of the input vectors. Converges at an
/// assignment fixpoint or max_iters; an emptied cluster is re-seeded to
/// the farthest point. SSE is non-increasing per iteration.
KMeansResult kmeans(const std::vector<gateway::EmbeddingVector>& vectors,
                    std::size_t k, std::size_t max_iters, std::uint64_t seed);

/// Two-layer clustering: layer1_k top clusters, then per-cluster child
/// counts allocated proportionally to member counts (every parent keeps
/// at least one child) so children total layer2_total.
std::vector<ClusterNode> hierarchical_cluster(
    const std::vector<gateway::EmbeddingVector>& vectors,
    std::size_t layer1_k = 10, std::size_t layer2_total = 50,
    std::uint64_t seed = 0);

/// Attaches taxonomy labels to nodes whose ids match a taxonomy entry.
void apply_taxonomy_labels(std::vector<ClusterNode>& nodes,
                           const Taxonomy& taxonomy);

// ---------------------------------------------------------------------------
// Dedup and sampling
// ---------------------------------------------------------------------------

/// Greedy scan in id order: an item is kept iff its max cosine
/// similarity to all previously kept questions stays below the
/// threshold. Idempotent.
std::vector<QaItem> dedupe(const std::vector<QaItem>& items,
                           gateway::Embedder& embedder, double threshold = 0.92);

/// Seeded per-cluster sampling of between per_cluster_min and
/// per_cluster_max items, preferring higher difficulty and greedily
/// balancing interrogative classes across the whole set. Throws
/// CorpusError naming any cluster with fewer than per_cluster_min
/// candidates.
std::vector<QaItem> sample_benchmark(const std::vector<QaItem>& items,
                                     std::size_t per_cluster_min = 4,
                                     std::size_t per_cluster_max = 9,
                                     std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Synthesis prompt assembly and output parsing
// ---------------------------------------------------------------------------

/// Seeded sample of min(sample_size, available) issues embedded into the
/// generation template, with the taxonomy and repository name filled in.
std::string build_synthesis_prompt(const ClusterNode& cluster,
                                   const std::string& repo,
                                   const std::vector<IssueDoc>& issues,
                                   std::size_t sample_size = 20,
                                   std::uint64_t seed = 0);

struct SynthesisResult {
  std::optional<QaItem> item;
  std::vector<std::string> rejections;  // reasons, when rejected
};

/// Counts word-boundary occurrences of What/Why/Where/How
/// (case-insensitive).
std::size_t interrogative_count(const std::string& question);

/// Parses the structured synthesis reply and validates the quality
/// rules: a single interrogative, a ground-truth answer, evidence with
/// line ranges, and cluster/qa-type labels present in the taxonomy.
/// Rejected candidates carry their reasons rather than being dropped
/// silently.
SynthesisResult parse_synthesis_output(const std::string& reply,
                                       const Taxonomy& taxonomy);

}  // namespace repoqa::corpus
