#include "nnbom/store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "nnbom/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nnbom::db {

namespace {

const char* kBuiltinTaxonomy =
    "# Keyword lists for the seven AI application domains.\n"
    "# A repository joins a domain when its name or any topic contains a\n"
    "# keyword (case-insensitive substring).\n"
    "[UL]\n"
    "unsupervised\nautoencoder\nself-supervised\nclustering\ncontrastive\nrepresentation-learning\n"
    "[RL]\n"
    "reinforcement\nq-learning\ndqn\npolicy-gradient\nactor-critic\ngym\nrllib\n"
    "[CV]\n"
    "vision\nimage\ndetection\nsegmentation\ncnn\nresnet\nyolo\nconvolutional\nvisual\n"
    "[MML]\n"
    "multimodal\nvision-language\nclip\nvqa\ncaptioning\naudio-visual\ncross-modal\n"
    "[NLP]\n"
    "nlp\nlanguage\ntext\nbert\ntranslation\nsentiment\nquestion-answering\nnamed-entity\nspeech\n"
    "[GM]\n"
    "gan\ngenerative\ndiffusion\nvae\nstyle-transfer\nsynthesis\nadversarial\n"
    "[Trans]\n"
    "transformer\nattention\nvit\ngpt\nllm\nself-attention\n";

std::string iso(int64_t t) { return util::iso_utc(t); }

int64_t parse_time(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw std::runtime_error("store: missing time field");
    auto parsed = util::parse_iso_utc(it->get<std::string>());
    if (!parsed) throw std::runtime_error("store: bad timestamp " + it->get<std::string>());
    return *parsed;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    if (!in) return lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

template <typename Fn>
void write_records(const std::string& path, size_t count, Fn&& record_at) {
    std::string out;
    for (size_t i = 0; i < count; ++i) {
        out += record_at(i).dump();
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

}  // namespace

const RepoRow* Store::find_repo(const std::string& id) const {
    for (const auto& r : repos) {
        if (r.repo == id) return &r;
    }
    return nullptr;
}

const VersionRow* Store::find_version(int index) const {
    for (const auto& v : versions) {
        if (v.version_index == index) return &v;
    }
    return nullptr;
}

int Store::version_year(int index) const {
    const VersionRow* v = find_version(index);
    if (!v) throw std::out_of_range("unknown version index " + std::to_string(index));
    return util::year_of(v->release_unix);
}

void Store::save(const std::string& dir) const {
    fs::create_directories(dir);

    json meta;
    meta["format"] = 1;
    meta["root_class"] = root_class;
    meta["next_version_index"] = next_version_index;
    meta["next_module_index"] = next_module_index;
    json skips = json::array();
    for (const auto& s : skipped) skips.push_back({{"reason", s.reason}, {"repo", s.repo}});
    meta["skipped"] = skips;
    util::write_file_atomic(dir + "/meta.json", meta.dump(2) + "\n");

    write_records(dir + "/repos.jsonl", repos.size(), [&](size_t i) {
        const auto& r = repos[i];
        return json{{"created_at", iso(r.created_at)},
                    {"domains", r.domains},
                    {"name", r.name},
                    {"repo", r.repo},
                    {"topics", r.topics}};
    });
    write_records(dir + "/versions.jsonl", versions.size(), [&](size_t i) {
        const auto& v = versions[i];
        return json{{"diagnostics", v.diagnostics},
                    {"modules_cloned", v.modules_cloned},
                    {"modules_self", v.modules_self},
                    {"release_time", iso(v.release_unix)},
                    {"repo", v.repo},
                    {"tag", v.tag},
                    {"version_index", v.version_index}};
    });
    write_records(dir + "/modules.jsonl", modules.size(), [&](size_t i) {
        const auto& m = modules[i];
        return json{{"domains", m.domains},
                    {"file", m.file},
                    {"frequency", m.frequency},
                    {"hash", m.hash},
                    {"loc", m.loc},
                    {"module_index", m.module_index},
                    {"qualified_name", m.qualified_name},
                    {"version_index", m.version_index}};
    });
    write_records(dir + "/families.jsonl", families.size(), [&](size_t i) {
        const auto& f = families[i];
        return json{{"domains", f.domains},
                    {"first_year", f.first_year},
                    {"frequency", f.frequency},
                    {"hash", f.hash},
                    {"last_year", f.last_year},
                    {"members", f.members},
                    {"repos", f.repositories},
                    {"representative", f.representative}};
    });
    write_records(dir + "/tpls.jsonl", tpls.size(), [&](size_t i) {
        const auto& t = tpls[i];
        json j{{"name", t.name}, {"source", t.source}, {"version_index", t.version_index}};
        j["version"] = t.version ? json(*t.version) : json(nullptr);
        return j;
    });
    write_records(dir + "/ptms.jsonl", ptms.size(), [&](size_t i) {
        const auto& p = ptms[i];
        json j{{"file", p.file},
               {"hub", p.hub},
               {"line", p.line},
               {"resolution", p.resolution},
               {"version_index", p.version_index}};
        j["model"] = p.model ? json(*p.model) : json(nullptr);
        return j;
    });
    write_records(dir + "/edges.jsonl", edges.size(), [&](size_t i) {
        const auto& e = edges[i];
        return json{{"a", e.a}, {"b", e.b}, {"weight", e.weight}};
    });
}

Store Store::load(const std::string& dir) {
    Store store;
    if (!fs::exists(dir + "/meta.json")) {
        throw std::runtime_error("not an NNBOM store (missing meta.json): " + dir);
    }
    json meta = json::parse(util::read_file(dir + "/meta.json"));
    store.root_class = meta.value("root_class", std::string(extractors::kDefaultRootClass));
    store.next_version_index = meta.value("next_version_index", 0);
    store.next_module_index = meta.value("next_module_index", 0);
    for (const auto& s : meta.value("skipped", json::array())) {
        store.skipped.push_back({s.value("repo", ""), s.value("reason", "")});
    }

    for (const auto& line : read_lines(dir + "/repos.jsonl")) {
        json j = json::parse(line);
        RepoRow r;
        r.repo = j.at("repo").get<std::string>();
        r.name = j.at("name").get<std::string>();
        r.topics = j.at("topics").get<std::vector<std::string>>();
        r.created_at = parse_time(j, "created_at");
        r.domains = j.at("domains").get<std::set<std::string>>();
        store.repos.push_back(std::move(r));
    }
    for (const auto& line : read_lines(dir + "/versions.jsonl")) {
        json j = json::parse(line);
        VersionRow v;
        v.version_index = j.at("version_index").get<int>();
        v.repo = j.at("repo").get<std::string>();
        v.tag = j.at("tag").get<std::string>();
        v.release_unix = parse_time(j, "release_time");
        v.modules_self = j.at("modules_self").get<std::vector<int>>();
        v.modules_cloned = j.at("modules_cloned").get<std::vector<int>>();
        v.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
        store.versions.push_back(std::move(v));
    }
    for (const auto& line : read_lines(dir + "/modules.jsonl")) {
        json j = json::parse(line);
        ModuleRow m;
        m.module_index = j.at("module_index").get<int>();
        m.hash = j.at("hash").get<std::string>();
        m.version_index = j.at("version_index").get<int>();
        m.loc = j.at("loc").get<int>();
        m.domains = j.at("domains").get<std::set<std::string>>();
        m.frequency = j.at("frequency").get<int>();
        m.qualified_name = j.at("qualified_name").get<std::string>();
        m.file = j.at("file").get<std::string>();
        store.modules.push_back(std::move(m));
    }
    for (const auto& line : read_lines(dir + "/families.jsonl")) {
        json j = json::parse(line);
        clonecore::CloneFamily f;
        f.hash = j.at("hash").get<std::string>();
        f.members = j.at("members").get<std::vector<int>>();
        f.repositories = j.at("repos").get<std::set<std::string>>();
        f.first_year = j.at("first_year").get<int>();
        f.last_year = j.at("last_year").get<int>();
        f.domains = j.at("domains").get<std::map<std::string, int>>();
        f.frequency = j.at("frequency").get<int>();
        f.representative = j.at("representative").get<std::string>();
        store.families.push_back(std::move(f));
    }
    for (const auto& line : read_lines(dir + "/tpls.jsonl")) {
        json j = json::parse(line);
        TplRow t;
        t.version_index = j.at("version_index").get<int>();
        t.name = j.at("name").get<std::string>();
        if (!j.at("version").is_null()) t.version = j.at("version").get<std::string>();
        t.source = j.at("source").get<std::string>();
        store.tpls.push_back(std::move(t));
    }
    for (const auto& line : read_lines(dir + "/ptms.jsonl")) {
        json j = json::parse(line);
        PtmRow p;
        p.version_index = j.at("version_index").get<int>();
        p.hub = j.at("hub").get<std::string>();
        if (!j.at("model").is_null()) p.model = j.at("model").get<std::string>();
        p.file = j.at("file").get<std::string>();
        p.line = j.at("line").get<int>();
        p.resolution = j.at("resolution").get<std::string>();
        store.ptms.push_back(std::move(p));
    }
    for (const auto& line : read_lines(dir + "/edges.jsonl")) {
        json j = json::parse(line);
        store.edges.push_back(
            {j.at("a").get<std::string>(), j.at("b").get<std::string>(), j.at("weight").get<int>()});
    }
    return store;
}

const std::vector<std::string>& DomainTaxonomy::domain_names() {
    static const std::vector<std::string> names = {"UL", "RL", "CV", "MML", "NLP", "GM", "Trans"};
    return names;
}

DomainTaxonomy DomainTaxonomy::builtin() {
    std::vector<std::string> errors;
    return parse(kBuiltinTaxonomy, errors);
}

DomainTaxonomy DomainTaxonomy::parse(std::string_view text, std::vector<std::string>& errors) {
    DomainTaxonomy tax;
    std::string current;
    int lineno = 0;
    for (const auto& raw : util::split(text, '\n')) {
        ++lineno;
        std::string_view line = util::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            current = std::string(line.substr(1, line.size() - 2));
            bool known = std::find(domain_names().begin(), domain_names().end(), current) !=
                         domain_names().end();
            if (!known) {
                errors.push_back("line " + std::to_string(lineno) + ": unknown domain '" +
                                 current + "'");
                current.clear();
            } else {
                tax.keywords[current];  // a domain may end up with no keywords
            }
            continue;
        }
        if (current.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": keyword before [DOMAIN] header");
            continue;
        }
        std::string kw = util::to_lower(std::string(line));
        auto& list = tax.keywords[current];
        if (std::find(list.begin(), list.end(), kw) != list.end()) {
            errors.push_back("line " + std::to_string(lineno) + ": duplicate keyword '" + kw + "'");
            continue;
        }
        list.push_back(std::move(kw));
    }
    return tax;
}

std::string DomainTaxonomy::serialize() const {
    std::string out;
    for (const auto& name : domain_names()) {
        auto it = keywords.find(name);
        if (it == keywords.end()) continue;
        out += "[" + name + "]\n";
        for (const auto& kw : it->second) out += kw + "\n";
    }
    return out;
}

std::set<std::string> classify_domains(const RepoMeta& meta, const DomainTaxonomy& taxonomy) {
    std::set<std::string> out;
    std::vector<std::string> haystacks;
    haystacks.push_back(util::to_lower(meta.name));
    for (const auto& t : meta.topics) haystacks.push_back(util::to_lower(t));

    for (const auto& [domain, kws] : taxonomy.keywords) {
        for (const auto& kw : kws) {
            bool hit = false;
            for (const auto& h : haystacks) {
                if (h.find(kw) != std::string::npos) {
                    hit = true;
                    break;
                }
            }
            if (hit) {
                out.insert(domain);
                break;
            }
        }
    }
    return out;
}

int size_bucket(int module_count) {
    if (module_count < 100) return 0;
    if (module_count < 500) return 1;
    if (module_count < 1000) return 2;
    return 3;
}

void mark_reuse(Store& store) {
    std::map<int, const VersionRow*> version_of;
    for (const auto& v : store.versions) version_of[v.version_index] = &v;

    struct Occurrence {
        int module_index;
        std::string repo;
        int64_t time;
        int version_index;
    };
    std::map<std::string, std::vector<Occurrence>> by_hash;
    for (const auto& m : store.modules) {
        const VersionRow* v = version_of.at(m.version_index);
        by_hash[m.hash].push_back({m.module_index, v->repo, v->release_unix, v->version_index});
    }

    std::map<int, std::vector<int>> self_of, cloned_of;  // version -> module ids
    for (const auto& [hash, occs] : by_hash) {
        for (const auto& occ : occs) {
            bool cloned = false;
            for (const auto& other : occs) {
                if (other.repo != occ.repo && other.time < occ.time) {
                    cloned = true;
                    break;
                }
            }
            (cloned ? cloned_of : self_of)[occ.version_index].push_back(occ.module_index);
        }
    }
    for (auto& v : store.versions) {
        v.modules_self = self_of.count(v.version_index) ? self_of[v.version_index] : std::vector<int>{};
        v.modules_cloned =
            cloned_of.count(v.version_index) ? cloned_of[v.version_index] : std::vector<int>{};
        std::sort(v.modules_self.begin(), v.modules_self.end());
        std::sort(v.modules_cloned.begin(), v.modules_cloned.end());
    }
}

void finalize_store(Store& store) {
    std::map<int, const VersionRow*> version_of;
    for (const auto& v : store.versions) version_of[v.version_index] = &v;
    std::map<std::string, const RepoRow*> repo_of;
    for (const auto& r : store.repos) repo_of[r.repo] = &r;

    // propagate repo domains onto modules, then group into families
    std::vector<clonecore::FamilyMemberInput> inputs;
    inputs.reserve(store.modules.size());
    for (auto& m : store.modules) {
        const VersionRow* v = version_of.at(m.version_index);
        const RepoRow* r = repo_of.at(v->repo);
        m.domains = r->domains;

        clonecore::FamilyMemberInput in;
        in.module_index = m.module_index;
        in.hash = m.hash;
        in.repo = v->repo;
        in.release_year = util::year_of(v->release_unix);
        in.release_unix = v->release_unix;
        in.domains = m.domains;
        auto dot = m.qualified_name.find_last_of('.');
        in.class_name = dot == std::string::npos ? m.qualified_name : m.qualified_name.substr(dot + 1);
        inputs.push_back(std::move(in));
    }
    store.families = clonecore::group_families(inputs);

    std::map<std::string, int> freq_of;
    for (const auto& f : store.families) freq_of[f.hash] = f.frequency;
    for (auto& m : store.modules) m.frequency = freq_of.at(m.hash);

    mark_reuse(store);

    // repository dependency edges: weight = number of shared clone families
    std::map<std::pair<std::string, std::string>, int> weights;
    for (const auto& f : store.families) {
        std::vector<std::string> repos(f.repositories.begin(), f.repositories.end());
        for (size_t i = 0; i < repos.size(); ++i) {
            for (size_t j = i + 1; j < repos.size(); ++j) {
                ++weights[{repos[i], repos[j]}];
            }
        }
    }
    store.edges.clear();
    for (const auto& [pair, w] : weights) store.edges.push_back({pair.first, pair.second, w});
}

}  // namespace nnbom::db
