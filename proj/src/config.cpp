#include "faircv/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace faircv::cfg {

void MetricsConfig::validate() const {
    if (bins < 1) throw ConfigError("metrics: bins must be >= 1");
    if (epsilon < 0.0) throw ConfigError("metrics: epsilon must be nonnegative");
    if (top_k < 1) throw ConfigError("metrics: top_k must be >= 1");
}

void ExperimentConfig::validate() const {
    weights.validate();
    distributions.validate();
    embedding.validate();
    agnostic.validate();
    metrics.validate();
    if (split.ratio <= 0.0 || split.ratio >= 1.0) throw ConfigError("split: ratio must lie strictly between 0 and 1");
    if (training.epochs < 1 || training.batch_size < 1) throw ConfigError("training: epochs and batch_size must be >= 1");
    if (training.lr <= 0.0) throw ConfigError("training: learning_rate must be positive");
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct ParsedFile {
    // section -> key -> (value, line number)
    std::map<std::string, std::map<std::string, std::pair<std::string, size_t>>> sections;
    std::string origin;
};

ParsedFile parse_sections(const std::string& text, const std::string& origin) {
    ParsedFile parsed;
    parsed.origin = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            parsed.sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        if (section.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any [section]");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        parsed.sections[section][key] = {value, line_no};
    }
    return parsed;
}

class SectionReader {
public:
    SectionReader(ParsedFile& file, const std::string& name) : file_(file), name_(name) {
        if (auto it = file_.sections.find(name); it != file_.sections.end()) entries_ = &it->second;
    }

    ~SectionReader() {
        if (entries_ != nullptr) file_.sections.erase(name_);
    }

    bool has(const std::string& key) const { return entries_ != nullptr && entries_->count(key) > 0; }

    double real(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const auto& [value, line] = consume(key);
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw ConfigError(where(line) + ": '" + value + "' is not a number for key '" + key + "'");
        }
        return out;
    }

    long integer(const std::string& key, long fallback) {
        if (!has(key)) return fallback;
        const auto& [value, line] = consume(key);
        long out = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw ConfigError(where(line) + ": '" + value + "' is not an integer for key '" + key + "'");
        }
        return out;
    }

    uint64_t unsigned_integer(const std::string& key, uint64_t fallback) {
        if (!has(key)) return fallback;
        const auto& [value, line] = consume(key);
        uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw ConfigError(where(line) + ": '" + value + "' is not an unsigned integer for key '" + key + "'");
        }
        return out;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return consume(key).first;
    }

    std::vector<double> real_list(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        const auto [value, line] = consume(key);
        std::vector<double> out;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (ec != std::errc{} || ptr != t.data() + t.size()) {
                throw ConfigError(where(line) + ": '" + t + "' is not a number in list '" + key + "'");
            }
            out.push_back(v);
        }
        if (out.empty()) throw ConfigError(where(line) + ": empty list for key '" + key + "'");
        return out;
    }

    void finish() {
        if (entries_ != nullptr && !entries_->empty()) {
            const auto& [key, entry] = *entries_->begin();
            throw ConfigError(where(entry.second) + ": unknown key '" + key + "' in [" + name_ + "]");
        }
    }

private:
    std::pair<std::string, size_t> consume(const std::string& key) {
        auto node = entries_->extract(key);
        return node.mapped();
    }

    std::string where(size_t line) const { return file_.origin + ":" + std::to_string(line); }

    ParsedFile& file_;
    std::string name_;
    std::map<std::string, std::pair<std::string, size_t>>* entries_ = nullptr;
};

void read_distribution(SectionReader& reader, const std::string& name, data::DiscreteDistribution& dist) {
    dist.levels = reader.real_list(name + "_levels", dist.levels);
    dist.probabilities = reader.real_list(name + "_probs", dist.probabilities);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ",";
        out += fmt(values[i]);
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ParsedFile file = parse_sections(text, origin);
    ExperimentConfig config;

    {
        SectionReader weights(file, "weights");
        static constexpr const char* kNames[4] = {"education", "experience", "availability", "recommendation"};
        for (int i = 0; i < 4; ++i) config.weights.alpha[static_cast<size_t>(i)] = weights.real(kNames[i], config.weights.alpha[static_cast<size_t>(i)]);
        for (int l = 1; l <= 8; ++l) {
            config.weights.alpha[static_cast<size_t>(3 + l)] =
                weights.real("language" + std::to_string(l), config.weights.alpha[static_cast<size_t>(3 + l)]);
        }
        weights.finish();
    }
    {
        SectionReader dists(file, "distributions");
        read_distribution(dists, "education", config.distributions.education);
        read_distribution(dists, "experience", config.distributions.experience);
        read_distribution(dists, "availability", config.distributions.availability);
        read_distribution(dists, "recommendation", config.distributions.recommendation);
        read_distribution(dists, "first_language", config.distributions.first_language);
        read_distribution(dists, "language", config.distributions.language);
        dists.finish();
    }
    {
        SectionReader penalties(file, "penalties");
        config.weights.gender_penalty = penalties.real("gender", config.weights.gender_penalty);
        const auto eth = penalties.real_list(
            "ethnicity", {config.weights.ethnicity_penalty[0], config.weights.ethnicity_penalty[1],
                          config.weights.ethnicity_penalty[2]});
        if (eth.size() != 3) throw ConfigError(origin + ": penalties.ethnicity needs exactly 3 values");
        for (size_t i = 0; i < 3; ++i) config.weights.ethnicity_penalty[i] = eth[i];
        penalties.finish();
    }
    {
        SectionReader noise(file, "noise");
        config.weights.noise_sigma = noise.real("sigma", config.weights.noise_sigma);
        noise.finish();
    }
    {
        SectionReader embedding(file, "embedding");
        config.embedding.gender_strength = embedding.real("gender_strength", config.embedding.gender_strength);
        config.embedding.ethnicity_strength = embedding.real("ethnicity_strength", config.embedding.ethnicity_strength);
        config.embedding.noise_sigma = embedding.real("noise_sigma", config.embedding.noise_sigma);
        config.embedding.direction_seed = embedding.unsigned_integer("direction_seed", config.embedding.direction_seed);
        embedding.finish();
    }
    {
        SectionReader training(file, "training");
        config.training.epochs = static_cast<int>(training.integer("epochs", config.training.epochs));
        config.training.batch_size = static_cast<int>(training.integer("batch_size", config.training.batch_size));
        config.training.lr = training.real("learning_rate", config.training.lr);
        training.finish();
    }
    {
        SectionReader agnostic(file, "agnostic");
        config.agnostic.lambda = agnostic.real("lambda", config.agnostic.lambda);
        config.agnostic.outer_epochs = static_cast<int>(agnostic.integer("outer_epochs", config.agnostic.outer_epochs));
        config.agnostic.probe_inner_epochs =
            static_cast<int>(agnostic.integer("probe_inner_epochs", config.agnostic.probe_inner_epochs));
        config.agnostic.batch_size = static_cast<int>(agnostic.integer("batch_size", config.agnostic.batch_size));
        config.agnostic.lr = agnostic.real("learning_rate", config.agnostic.lr);
        config.agnostic.transform_lr = agnostic.real("transform_learning_rate", config.agnostic.transform_lr);
        config.agnostic.probe_lr = agnostic.real("probe_learning_rate", config.agnostic.probe_lr);
        config.agnostic.transform_init_scale =
            agnostic.real("transform_init_scale", config.agnostic.transform_init_scale);
        config.agnostic.transform_decay = agnostic.real("transform_decay", config.agnostic.transform_decay);
        const std::string attrs = agnostic.text(
            "attributes", std::string(config.agnostic.probe_gender ? "gender" : "") +
                              (config.agnostic.probe_ethnicity ? (config.agnostic.probe_gender ? ",ethnicity" : "ethnicity") : ""));
        config.agnostic.probe_gender = attrs.find("gender") != std::string::npos;
        config.agnostic.probe_ethnicity = attrs.find("ethnicity") != std::string::npos;
        agnostic.finish();
    }
    {
        SectionReader metrics(file, "metrics");
        config.metrics.bins = static_cast<int>(metrics.integer("bins", config.metrics.bins));
        config.metrics.epsilon = metrics.real("epsilon", config.metrics.epsilon);
        config.metrics.top_k = static_cast<int>(metrics.integer("top_k", config.metrics.top_k));
        metrics.finish();
    }
    {
        SectionReader split(file, "split");
        config.split.ratio = split.real("ratio", config.split.ratio);
        config.split.seed = split.unsigned_integer("seed", config.split.seed);
        split.finish();
    }

    if (!file.sections.empty()) {
        throw ConfigError(origin + ": unknown section [" + file.sections.begin()->first + "]");
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.filename().string());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "[weights]\n";
    static constexpr const char* kNames[4] = {"education", "experience", "availability", "recommendation"};
    for (int i = 0; i < 4; ++i) out << kNames[i] << " = " << fmt(config.weights.alpha[static_cast<size_t>(i)]) << "\n";
    for (int l = 1; l <= 8; ++l) out << "language" << l << " = " << fmt(config.weights.alpha[static_cast<size_t>(3 + l)]) << "\n";

    out << "\n[distributions]\n";
    const auto dist = [&](const char* name, const data::DiscreteDistribution& d) {
        out << name << "_levels = " << fmt_list(d.levels) << "\n";
        out << name << "_probs = " << fmt_list(d.probabilities) << "\n";
    };
    dist("education", config.distributions.education);
    dist("experience", config.distributions.experience);
    dist("availability", config.distributions.availability);
    dist("recommendation", config.distributions.recommendation);
    dist("first_language", config.distributions.first_language);
    dist("language", config.distributions.language);

    out << "\n[penalties]\n";
    out << "gender = " << fmt(config.weights.gender_penalty) << "\n";
    out << "ethnicity = " << fmt(config.weights.ethnicity_penalty[0]) << "," << fmt(config.weights.ethnicity_penalty[1])
        << "," << fmt(config.weights.ethnicity_penalty[2]) << "\n";

    out << "\n[noise]\n";
    out << "sigma = " << fmt(config.weights.noise_sigma) << "\n";

    out << "\n[embedding]\n";
    out << "gender_strength = " << fmt(config.embedding.gender_strength) << "\n";
    out << "ethnicity_strength = " << fmt(config.embedding.ethnicity_strength) << "\n";
    out << "noise_sigma = " << fmt(config.embedding.noise_sigma) << "\n";
    out << "direction_seed = " << config.embedding.direction_seed << "\n";

    out << "\n[training]\n";
    out << "epochs = " << config.training.epochs << "\n";
    out << "batch_size = " << config.training.batch_size << "\n";
    out << "learning_rate = " << fmt(config.training.lr) << "\n";

    out << "\n[agnostic]\n";
    out << "lambda = " << fmt(config.agnostic.lambda) << "\n";
    out << "outer_epochs = " << config.agnostic.outer_epochs << "\n";
    out << "probe_inner_epochs = " << config.agnostic.probe_inner_epochs << "\n";
    out << "batch_size = " << config.agnostic.batch_size << "\n";
    out << "learning_rate = " << fmt(config.agnostic.lr) << "\n";
    out << "transform_learning_rate = " << fmt(config.agnostic.transform_lr) << "\n";
    out << "probe_learning_rate = " << fmt(config.agnostic.probe_lr) << "\n";
    out << "transform_init_scale = " << fmt(config.agnostic.transform_init_scale) << "\n";
    out << "transform_decay = " << fmt(config.agnostic.transform_decay) << "\n";
    out << "attributes = ";
    if (config.agnostic.probe_gender) out << "gender";
    if (config.agnostic.probe_gender && config.agnostic.probe_ethnicity) out << ",";
    if (config.agnostic.probe_ethnicity) out << "ethnicity";
    out << "\n";

    out << "\n[metrics]\n";
    out << "bins = " << config.metrics.bins << "\n";
    out << "epsilon = " << fmt(config.metrics.epsilon) << "\n";
    out << "top_k = " << config.metrics.top_k << "\n";

    out << "\n[split]\n";
    out << "ratio = " << fmt(config.split.ratio) << "\n";
    out << "seed = " << config.split.seed << "\n";
    return out.str();
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open config file for writing: " + path.string());
    out << serialize_config(config);
    if (!out) throw DataError("failed writing config file: " + path.string());
}

}  // namespace faircv::cfg
