#include "promptseg/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>
#include <openssl/evp.h>

#include "promptseg/errors.hpp"
#include "promptseg/fsio.hpp"

namespace promptseg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("sha256: context allocation failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, size) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

namespace {

Split split_from_string(const std::string& s, const std::string& id) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ParseError("manifest entry '" + id + "': split must be 'train' or 'test', got '" + s + "'");
}

std::string require_string(const json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ParseError("manifest entry #" + std::to_string(index) + ": missing string field '" +
                         key + "'");
    }
    return it->get<std::string>();
}

} // namespace

Manifest load_manifest(const fs::path& path) {
    const std::string text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports line and column; surface them as the location
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
        throw ParseError("manifest " + path.string() + ": top level must be an object with an 'entries' array");
    }

    Manifest m;
    if (doc.contains("version")) {
        if (!doc["version"].is_string()) throw ParseError("manifest: 'version' must be a string");
        m.version = doc["version"].get<std::string>();
    }

    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& e : doc["entries"]) {
        if (!e.is_object()) throw ParseError("manifest entry #" + std::to_string(index) + ": not an object");
        ManifestEntry entry;
        entry.id = require_string(e, "id", index);
        entry.image_path = base / require_string(e, "image", index);
        entry.mask_path = base / require_string(e, "mask", index);
        entry.split = split_from_string(require_string(e, "split", index), entry.id);
        if (!seen.insert(entry.id).second) {
            throw DuplicateId("manifest: duplicate id '" + entry.id + "'");
        }
        if (!fs::exists(entry.image_path)) {
            throw MissingFile("manifest entry '" + entry.id + "': missing file " + entry.image_path.string());
        }
        if (!fs::exists(entry.mask_path)) {
            throw MissingFile("manifest entry '" + entry.id + "': missing file " + entry.mask_path.string());
        }
        m.entries.push_back(std::move(entry));
        ++index;
    }
    return m;
}

Dataset load_examples(const Manifest& manifest, const PreprocessConfig& cfg) {
    Dataset ds;
    for (const auto& entry : manifest.entries) {
        LabeledExample ex;
        ex.id = entry.id;
        try {
            const auto image_bytes = read_file(entry.image_path);
            ex.image = resize_bilinear(decode_image(image_bytes), cfg.target_side);
            const auto mask_bytes = read_file(entry.mask_path);
            ex.mask = resize_nearest(mask_from_image(decode_image(mask_bytes)), cfg.target_side);
        } catch (const Error& e) {
            throw DecodeError("entry '" + entry.id + "': " + e.what());
        }
        (entry.split == Split::train ? ds.train : ds.test).push_back(std::move(ex));
    }
    auto by_id = [](const LabeledExample& a, const LabeledExample& b) { return a.id < b.id; };
    std::sort(ds.train.begin(), ds.train.end(), by_id);
    std::sort(ds.test.begin(), ds.test.end(), by_id);
    return ds;
}

namespace {

std::string preprocess_fingerprint(const PreprocessConfig& cfg) {
    char buf[64];
    std::string s = "side=" + std::to_string(cfg.target_side);
    for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof(buf), ";mean%d=%.17g;std%d=%.17g", c, cfg.channel_means[c], c,
                      cfg.channel_stds[c]);
        s += buf;
    }
    return s;
}

std::string dataset_fingerprint(const Manifest& manifest, const PreprocessConfig& cfg) {
    std::vector<const ManifestEntry*> sorted;
    sorted.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const ManifestEntry* a, const ManifestEntry* b) { return a->id < b->id; });

    std::string acc = "version=" + manifest.version + "\n";
    for (const ManifestEntry* e : sorted) {
        const auto image_bytes = read_file(e->image_path);
        const auto mask_bytes = read_file(e->mask_path);
        acc += e->id;
        acc += e->split == Split::train ? ":train:" : ":test:";
        acc += sha256_hex(image_bytes.data(), image_bytes.size());
        acc += ':';
        acc += sha256_hex(mask_bytes.data(), mask_bytes.size());
        acc += '\n';
    }
    acc += preprocess_fingerprint(cfg);
    return acc;
}

} // namespace

std::string cache_key(const Manifest& manifest, const PreprocessConfig& cfg, Metric metric) {
    const std::string acc = dataset_fingerprint(manifest, cfg) + "\nmetric=" + to_string(metric);
    return sha256_hex(acc.data(), acc.size()).substr(0, 32);
}

std::string dataset_digest(const Manifest& manifest, const PreprocessConfig& cfg) {
    const std::string acc = dataset_fingerprint(manifest, cfg);
    return sha256_hex(acc.data(), acc.size()).substr(0, 16);
}

} // namespace promptseg
