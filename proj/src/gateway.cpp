#include "aria/gateway.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <ctime>
#include <set>
#include <thread>

#include "aria/errors.hpp"

namespace aria {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string canonical_json(const json& j) {
  // nlohmann::json stores objects in a std::map, so dump() is already
  // key-sorted and whitespace-free.
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string wire_digest(std::string_view json_text) {
  return sha256_hex(canonical_json(json::parse(json_text)));
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Llm: return "llm";
    case BackendKind::Retrieval: return "retrieval";
    case BackendKind::Compiler: return "compiler";
    case BackendKind::TermIndex: return "term-index";
  }
  return "llm";
}

// --- ResponseCache ---------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(digest); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(dir_ / digest, std::ios::binary);
  if (!in) return std::nullopt;
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  memory_.emplace(digest, payload);
  return payload;
}

void ResponseCache::put(const std::string& digest, const std::string& payload) {
  std::lock_guard lock(mutex_);
  memory_[digest] = payload;
  if (dir_.empty()) return;
  // Write-then-rename so readers never observe a partial entry.
  auto tmp = dir_ / (digest + ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << payload;
  }
  std::filesystem::rename(tmp, dir_ / digest);
}

bool ResponseCache::erase(const std::string& digest) {
  std::lock_guard lock(mutex_);
  bool removed = memory_.erase(digest) > 0;
  if (!dir_.empty()) removed = std::filesystem::remove(dir_ / digest) || removed;
  return removed;
}

// --- Transcript ------------------------------------------------------------

namespace {
std::string utc_timestamp() {
  using namespace std::chrono;
  auto now = system_clock::now();
  std::time_t t = system_clock::to_time_t(now);
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}
}  // namespace

Transcript::Transcript(std::filesystem::path sink) {
  if (sink.has_parent_path()) std::filesystem::create_directories(sink.parent_path());
  sink_.emplace(sink, std::ios::trunc);
  if (!*sink_) throw Error("cannot open transcript " + sink.string());
}

void Transcript::append(json record) {
  std::lock_guard lock(mutex_);
  if (!record.contains("timestamp")) record["timestamp"] = utc_timestamp();
  if (sink_) {
    *sink_ << record.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    sink_->flush();
  }
  records_.push_back(std::move(record));
}

void Transcript::event(std::string_view name, json fields) {
  fields["event"] = name;
  if (!fields.contains("problem")) fields["problem"] = problem();
  append(std::move(fields));
}

void Transcript::set_problem(std::string problem) {
  std::lock_guard lock(mutex_);
  problems_[std::this_thread::get_id()] = std::move(problem);
}

std::string Transcript::problem() const {
  std::lock_guard lock(mutex_);
  auto it = problems_.find(std::this_thread::get_id());
  return it == problems_.end() ? std::string() : it->second;
}

std::vector<json> Transcript::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<json> Transcript::call_records() const {
  std::lock_guard lock(mutex_);
  std::vector<json> out;
  for (const auto& r : records_)
    if (r.contains("kind")) out.push_back(r);
  return out;
}

std::vector<json> Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read transcript " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

// --- Gateway ---------------------------------------------------------------

Gateway::Gateway(ResponseCache& cache, Transcript& transcript, CacheMode mode, RetryPolicy retry)
    : cache_(cache), transcript_(transcript), mode_(mode), retry_(retry) {}

Gateway::Result Gateway::call(BackendKind kind, std::string_view purpose, const json& key,
                              const std::function<std::string()>& perform) {
  auto start = std::chrono::steady_clock::now();
  Result result;
  result.digest = sha256_hex(canonical_json(key));

  auto record = [&](bool hit) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    transcript_.append(json{{"kind", to_string(kind)},
                            {"purpose", purpose},
                            {"digest", result.digest},
                            {"cache_hit", hit},
                            {"duration_ms", ms},
                            {"problem", transcript_.problem()}});
  };

  if (auto cached = cache_.get(result.digest)) {
    result.payload = std::move(*cached);
    result.from_cache = true;
    record(true);
    return result;
  }
  if (mode_ == CacheMode::ReplayOnly) throw CacheMiss(result.digest);

  for (int attempt = 0;; ++attempt) {
    try {
      result.payload = perform();
      break;
    } catch (const BackendUnavailable&) {
      if (attempt >= retry_.retries) {
        record(false);
        throw;
      }
      std::this_thread::sleep_for(retry_.backoff);
    }
  }
  cache_.put(result.digest, result.payload);
  record(false);
  return result;
}

// --- Stats -----------------------------------------------------------------

CallStats call_stats(const std::vector<json>& records) {
  CallStats s;
  std::set<std::string> begun, tagged;
  std::size_t llm_misses = 0;
  for (const auto& r : records) {
    if (r.value("event", "") == "problem_begin") begun.insert(r.value("problem", ""));
    if (!r.contains("kind")) continue;
    auto kind = r.at("kind").get<std::string>();
    bool hit = r.value("cache_hit", false);
    auto bump = [hit](CallCounts& c) {
      ++c.total;
      ++(hit ? c.hits : c.misses);
    };
    bump(s.total);
    bump(s.by_kind[kind]);
    if (kind == "llm") {
      bump(s.by_purpose[r.value("purpose", "")]);
      if (!hit) ++llm_misses;
    }
    tagged.insert(r.value("problem", ""));
  }
  s.problems = !begun.empty() ? begun.size() : tagged.size();
  s.cache_hit_ratio = s.total.total ? static_cast<double>(s.total.hits) / s.total.total : 0.0;
  s.mean_llm_calls_per_problem = s.problems ? static_cast<double>(llm_misses) / s.problems : 0.0;
  return s;
}

json to_json(const CallStats& stats) {
  auto counts = [](const CallCounts& c) {
    return json{{"total", c.total}, {"hits", c.hits}, {"misses", c.misses}};
  };
  json by_kind = json::object(), by_purpose = json::object();
  for (const auto& [k, c] : stats.by_kind) by_kind[k] = counts(c);
  for (const auto& [k, c] : stats.by_purpose) by_purpose[k] = counts(c);
  return json{{"total", counts(stats.total)},
              {"by_kind", by_kind},
              {"by_purpose", by_purpose},
              {"cache_hit_ratio", stats.cache_hit_ratio},
              {"problems", stats.problems},
              {"mean_llm_calls_per_problem", stats.mean_llm_calls_per_problem}};
}

}  // namespace aria
