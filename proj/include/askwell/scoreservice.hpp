#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "askwell/artifact.hpp"

namespace httplib {
class Server;
}

namespace askwell::scoreservice {

struct UserFields {
    std::optional<std::int64_t> karma;
    std::optional<bool> posted_before;
    std::optional<double> account_age_days;
};

// Encoded-space edit: `set` overwrites features, then `add` shifts them.
struct Scenario {
    std::string name;
    std::map<std::string, double> set;
    std::map<std::string, double> add;
};

struct DraftRequest {
    std::string title;
    std::string body;
    UserFields user;
    std::optional<UnixSeconds> timestamp;
    std::vector<Scenario> scenarios;

    // Throws InputError on anything malformed.
    static DraftRequest from_json(const nlohmann::json& doc);
};

struct Factor {
    std::string name;
    double raw = 0.0;
    double encoded = 0.0;
    double coefficient = 0.0;
    double contribution = 0.0;
};

struct WhatIf {
    std::string name;
    std::string description;
    std::map<std::string, double> changes;  // feature -> new encoded value
    double probability = 0.0;
    double delta = 0.0;
};

struct ScoreResult {
    double probability = 0.0;
    double logit = 0.0;
    double intercept = 0.0;
    UnixSeconds timestamp = 0;
    FeatureVector encoded;
    std::vector<Factor> factors;
    nlohmann::json detected;
    std::vector<WhatIf> what_if;
    std::vector<WhatIf> scenarios;

    nlohmann::json to_json() const;
};

using Clock = std::function<UnixSeconds()>;
UnixSeconds system_now();

class Scorer {
public:
    explicit Scorer(ModelArtifact artifact, Clock clock = system_now);

    ScoreResult score(const DraftRequest& draft) const;
    // Canonical toggles evaluated on an encoded vector.
    std::vector<WhatIf> what_if(const FeatureVector& base) const;
    WhatIf apply(const FeatureVector& base, const Scenario& scenario) const;
    double probability(const FeatureVector& x) const;
    nlohmann::json model_info() const;
    const ModelArtifact& artifact() const { return artifact_; }

private:
    WhatIf evaluate(const FeatureVector& base, double base_probability, std::string name, std::string description,
                    std::map<std::string, double> changes) const;

    ModelArtifact artifact_;
    Clock clock_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string cors_origin = "*";
};

// HTTP front end. The scorer is swapped as a whole on reload, so requests in
// flight keep the model they started with.
class Server {
public:
    explicit Server(ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void set_scorer(std::shared_ptr<const Scorer> scorer);
    void load(const std::filesystem::path& artifact_path);
    std::shared_ptr<const Scorer> scorer() const;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop() from elsewhere.
    void run();
    void stop();
    int port() const { return port_; }

private:
    void install_routes();
    int bind();

    ServerOptions options_;
    std::unique_ptr<httplib::Server> http_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Scorer> scorer_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace askwell::scoreservice
