#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "promptseg/example.hpp"
#include "promptseg/image.hpp"
#include "promptseg/similarity.hpp"

namespace promptseg {

enum class Split { train, test };

struct ManifestEntry {
    std::string id;
    std::filesystem::path image_path; // resolved against the manifest directory
    std::filesystem::path mask_path;
    Split split = Split::train;
};

struct Manifest {
    std::string version = "1";
    std::vector<ManifestEntry> entries;
};

struct Dataset {
    std::vector<LabeledExample> train; // sorted by id
    std::vector<LabeledExample> test;  // sorted by id
};

/// Parses and validates the manifest JSON:
///   {"version": "1", "entries": [{"id", "image", "mask", "split"}...]}
/// Paths are resolved relative to the manifest's directory. Throws ParseError
/// (with location), DuplicateId (naming the id), MissingFile (naming the path).
Manifest load_manifest(const std::filesystem::path& path);

/// Decodes and preprocesses every entry: images bilinear-resized to the target
/// side, masks thresholded (any channel >= 0.5) then nearest-neighbor-resized.
/// Decode failures carry the entry id. Split lists come back sorted by id.
Dataset load_examples(const Manifest& manifest, const PreprocessConfig& cfg);

/// Content hash (first 32 hex digits of SHA-256) over entry ids, splits, file
/// bytes, preprocessing parameters, and the metric tag. Names cache files.
std::string cache_key(const Manifest& manifest, const PreprocessConfig& cfg, Metric metric);

/// Same content hash without the metric component, 16 hex digits; names reports.
std::string dataset_digest(const Manifest& manifest, const PreprocessConfig& cfg);

std::string sha256_hex(const void* data, std::size_t size);

} // namespace promptseg
