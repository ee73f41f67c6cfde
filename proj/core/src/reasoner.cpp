#include "hsi/reasoner.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hsi/error.hpp"
#include "json_util.hpp"

using nlohmann::json;

namespace hsi {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Input, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string fixture_key(const std::string& kind, const std::string& task_prompt) {
  return sha256_hex(kind + "\n" + task_prompt);
}

std::string default_instructions() {
  return "Return a contact graph as JSON with keys body_nodes, scene_nodes and edges.\n"
         "Use only body parts from the provided vocabulary and only the provided scene element ids.\n"
         "Every edge is {\"part\": <body part>, \"element\": <element id>}; every scene node is\n"
         "{\"id\": <element id>, \"role\": \"functional\" | \"supporting\"}.\n"
         "Include the contacts a person needs to complete the task the way a human would, including\n"
         "support from the floor or furniture. Prefer one hand on a functional element unless the task\n"
         "needs both.\n";
}

// --- request -----------------------------------------------------------------------

ReasonerRequest ReasonerRequest::make(std::string task_prompt, std::vector<CandidateElement> elements) {
  ReasonerRequest r;
  r.task_prompt = std::move(task_prompt);
  r.elements = std::move(elements);
  r.body_vocabulary.assign(part_vocabulary().begin(), part_vocabulary().end());
  r.instructions = default_instructions();
  return r;
}

void ReasonerRequest::validate() const {
  if (task_prompt.empty()) throw Error(ErrorKind::Input, "reasoner request has an empty task prompt");
  const auto vocab = part_vocabulary();
  if (!std::equal(body_vocabulary.begin(), body_vocabulary.end(), vocab.begin(), vocab.end()))
    throw Error(ErrorKind::Input, "reasoner request vocabulary must equal the closed part set");
}

// --- config -------------------------------------------------------------------------

ReasonerConfig ReasonerConfig::parse(const std::string& spec) {
  ReasonerConfig cfg;
  if (spec.rfind("fixture:", 0) == 0) {
    cfg.mode = ReasonerMode::Fixture;
    cfg.fixture_path = spec.substr(8);
  } else if (spec.rfind("remote:", 0) == 0) {
    cfg.mode = ReasonerMode::Remote;
    cfg.endpoint = spec.substr(7);
  } else if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    cfg.mode = ReasonerMode::Remote;
    cfg.endpoint = spec;
  } else {
    throw Error(ErrorKind::Input, "reasoner spec must be fixture:<path> or remote:<url>, got '" + spec + "'");
  }
  cfg.validate();
  return cfg;
}

void ReasonerConfig::validate() const {
  if (mode == ReasonerMode::Fixture && fixture_path.empty())
    throw Error(ErrorKind::Input, "fixture mode requires a fixture path");
  if (mode == ReasonerMode::Remote && endpoint.empty())
    throw Error(ErrorKind::Input, "remote mode requires an endpoint URL");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::Input, "reasoner timeout must be positive");
  if (max_retries < 0) throw Error(ErrorKind::Input, "reasoner max_retries must be >= 0");
}

// --- client -------------------------------------------------------------------------

namespace {

struct Url {
  std::string scheme_host_port;
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::Input, "endpoint is not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string render_prompt(const ReasonerRequest& req) {
  std::ostringstream os;
  os << "Task: " << req.task_prompt << "\n\nScene elements:\n";
  for (const auto& e : req.elements) os << "- " << e.id << " (" << e.label << ", " << to_string(e.role) << ")\n";
  os << "\nBody parts:";
  for (const auto& p : req.body_vocabulary) os << ' ' << p;
  os << "\n\n" << req.instructions;
  return os.str();
}

json request_body(const ReasonerRequest& req) {
  json elements = json::array();
  for (const auto& e : req.elements)
    elements.push_back({{"id", e.id}, {"label", e.label}, {"role", to_string(e.role)}});
  return {{"kind", "contact_graph"},
          {"task_prompt", req.task_prompt},
          {"elements", elements},
          {"body_vocabulary", req.body_vocabulary},
          {"instructions", req.instructions},
          {"prompt", render_prompt(req)}};
}

std::vector<std::string> messages(const std::vector<Violation>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(x.message);
  return out;
}

}  // namespace

ReasonerClient::ReasonerClient(ReasonerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::string ReasonerClient::call(const std::string& kind, const std::string& key_text, const std::string& body) {
  const std::string key = fixture_key(kind, key_text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  std::string payload;
  if (cfg_.mode == ReasonerMode::Fixture) {
    std::lock_guard lock(mutex_);
    if (!fixtures_) {
      const json j = read_json_file(cfg_.fixture_path);
      if (!j.is_object()) throw Error(ErrorKind::Input, cfg_.fixture_path.string() + ": fixture file must be an object");
      fixtures_.emplace();
      for (const auto& [k, v] : j.items()) fixtures_->emplace(k, v.dump());
    }
    const auto it = fixtures_->find(key);
    if (it == fixtures_->end())
      throw Error(ErrorKind::Input, "no fixture for " + kind + " request '" + key_text + "' (key " + key + ")");
    payload = it->second;
  } else {
    const Url url = split_url(cfg_.endpoint);
    httplib::Client client(url.scheme_host_port);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - secs) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* api_key = std::getenv(cfg_.api_key_env.c_str()); api_key && *api_key)
      headers.emplace("Authorization", std::string("Bearer ") + api_key);

    std::string last_error;
    bool ok = false;
    for (int attempt = 0; attempt <= cfg_.max_retries && !ok; ++attempt) {
      if (attempt > 0 && cfg_.retry_backoff_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.retry_backoff_ms * attempt));
      auto res = client.Post(url.path, headers, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
      } else if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        payload = res->body;
        ok = true;
      }
      if (!ok) spdlog::warn("reasoner {} attempt {} failed: {}", kind, attempt + 1, last_error);
    }
    if (!ok)
      throw Error(ErrorKind::Transport, "reasoner endpoint " + cfg_.endpoint + " failed after " +
                                            std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
  }

  std::lock_guard lock(mutex_);
  cache_.emplace(key, payload);
  return payload;
}

std::vector<ElementProposal> ReasonerClient::request_elements(const std::string& task_prompt) {
  if (task_prompt.empty()) throw Error(ErrorKind::Input, "empty task prompt");
  const json body{{"kind", "elements"},
                  {"task_prompt", task_prompt},
                  {"prompt", "Task: " + task_prompt +
                                 "\nList the scene elements needed for this task as JSON "
                                 "{\"elements\": [{\"label\": ..., \"role\": \"functional\" | \"supporting\"}]}."}};
  const std::string raw = call("elements", task_prompt, body.dump());
  std::vector<ElementProposal> out;
  try {
    const json j = json::parse(raw);
    const json& list = j.is_array() ? j : j.at("elements");
    if (!list.is_array()) throw std::invalid_argument("elements must be a list");
    for (const auto& e : list) {
      if (!e.contains("role")) throw std::invalid_argument("element entry is missing \"role\"");
      out.push_back({e.at("label").get<std::string>(), parse_role(e.at("role").get<std::string>())});
    }
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), raw);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("malformed elements response: ") + e.what(), raw);
  }
  return out;
}

ContactGraph ReasonerClient::request_contact_graph(const ReasonerRequest& req) {
  req.validate();
  std::vector<SceneNode> available;
  for (const auto& e : req.elements) available.push_back({e.id, e.role});

  json body = request_body(req);
  ContactGraph graph = parse_contact_graph(call("contact_graph", req.task_prompt, body.dump()));
  auto violations = validate(graph, std::span<const SceneNode>(available));
  if (violations.empty()) return graph;

  spdlog::warn("contact graph has {} violation(s); requesting one repair", violations.size());
  const auto msgs = messages(violations);
  std::string repair_note = "\n\nYour previous answer violated these constraints:\n";
  for (const auto& m : msgs) repair_note += "- " + m + "\n";
  body["violations"] = msgs;
  body["prompt"] = body["prompt"].get<std::string>() + repair_note;

  ContactGraph repaired;
  try {
    repaired = parse_contact_graph(call("contact_graph_repair", req.task_prompt, body.dump()));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Transport) throw;
    throw ValidationError("contact graph failed validation and the repair round failed: " + std::string(e.what()), msgs);
  }
  violations = validate(repaired, std::span<const SceneNode>(available));
  if (!violations.empty())
    throw ValidationError("contact graph failed validation after the repair round", messages(violations));
  return repaired;
}

}  // namespace hsi
