#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hsi/contact_graph.hpp"
#include "hsi/scene.hpp"

namespace hsi {

struct ElementProposal {
  std::string label;
  ElementRole role = ElementRole::Supporting;
  bool operator==(const ElementProposal&) const = default;
};

struct CandidateElement {
  std::string id;
  std::string label;
  ElementRole role = ElementRole::Supporting;
};

struct ReasonerRequest {
  std::string task_prompt;
  std::vector<CandidateElement> elements;
  std::vector<std::string> body_vocabulary;
  std::string instructions;

  /// Request over the full part vocabulary with the default instructions.
  static ReasonerRequest make(std::string task_prompt, std::vector<CandidateElement> elements);
  /// Throws Input on an empty prompt or a vocabulary other than the closed set.
  void validate() const;
};

enum class ReasonerMode { Remote, Fixture };

struct ReasonerConfig {
  ReasonerMode mode = ReasonerMode::Fixture;
  std::string endpoint;                 // http(s)://host[:port]/path
  double timeout_seconds = 30.0;
  int max_retries = 2;
  int retry_backoff_ms = 250;
  std::filesystem::path fixture_path;
  std::string api_key_env = "HSI_REASONER_API_KEY";

  /// Parses `fixture:<path>` or `remote:<url>` (a bare http(s) URL also
  /// selects remote mode).
  static ReasonerConfig parse(const std::string& spec);
  void validate() const;
};

/// Lookup key for fixture files: hex SHA-256 of "<kind>\n<task prompt>".
std::string fixture_key(const std::string& kind, const std::string& task_prompt);
std::string sha256_hex(const std::string& data);

/// Default instruction text sent with contact-graph requests.
std::string default_instructions();

/// Thread-safe: independent calls may run concurrently; responses are cached
/// per request key.
class ReasonerClient {
 public:
  explicit ReasonerClient(ReasonerConfig cfg);

  std::vector<ElementProposal> request_elements(const std::string& task_prompt);

  /// Parsed and validated against `req.elements`. One repair round is
  /// attempted with the violations appended; ValidationError after that.
  ContactGraph request_contact_graph(const ReasonerRequest& req);

  const ReasonerConfig& config() const { return cfg_; }

 private:
  std::string call(const std::string& kind, const std::string& key_text, const std::string& body);

  ReasonerConfig cfg_;
  std::mutex mutex_;
  std::map<std::string, std::string> cache_;
  std::optional<std::map<std::string, std::string>> fixtures_;
};

}  // namespace hsi
