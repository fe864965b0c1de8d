#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "promptseg/dataset.hpp"
#include "promptseg/errors.hpp"
#include "promptseg/fsio.hpp"
#include "promptseg/image.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace promptseg;

namespace {

bool is_hex(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isxdigit(c) != 0; });
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("", 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::string abc = "abc";
    CHECK(sha256_hex(abc.data(), abc.size()) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest round-trip through the synthetic writer") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(16, 3, 2, 7, 0);
    const auto manifest_path = testsupport::write_dataset(set, dir.path);

    const Manifest manifest = load_manifest(manifest_path);
    CHECK(manifest.version == "1");
    REQUIRE(manifest.entries.size() == 5);

    std::size_t train_count = 0, test_count = 0;
    for (const ManifestEntry& e : manifest.entries) {
        CHECK(std::filesystem::exists(e.image_path));
        CHECK(std::filesystem::exists(e.mask_path));
        (e.split == Split::train ? train_count : test_count) += 1;
    }
    CHECK(train_count == 3);
    CHECK(test_count == 2);
}

TEST_CASE("loaded examples are sorted, binary-masked and resized") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(16, 3, 2, 11, 0);
    const auto manifest_path = testsupport::write_dataset(set, dir.path);

    PreprocessConfig cfg;
    cfg.target_side = 16; // identity resize: stored pixels come back quantized only
    const Dataset ds = load_examples(load_manifest(manifest_path), cfg);
    REQUIRE(ds.train.size() == 3);
    REQUIRE(ds.test.size() == 2);
    CHECK(std::is_sorted(ds.train.begin(), ds.train.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
    CHECK(std::is_sorted(ds.test.begin(), ds.test.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));

    for (const LabeledExample& ex : ds.train) {
        CHECK(ex.image.width == 16);
        CHECK(ex.image.height == 16);
        CHECK(ex.mask.width == 16);
    }

    // identity-size load reproduces the original masks exactly and the images
    // up to 8-bit quantization
    for (std::size_t i = 0; i < set.train.size(); ++i) {
        const auto it = std::find_if(ds.train.begin(), ds.train.end(),
                                     [&](const auto& e) { return e.id == set.train[i].id; });
        REQUIRE(it != ds.train.end());
        CHECK(it->mask == set.train[i].mask);
        for (std::size_t p = 0; p < it->image.pixels.size(); ++p) {
            const double quantized = std::lround(set.train[i].image.pixels[p] * 255.0) / 255.0;
            CHECK(it->image.pixels[p] == doctest::Approx(quantized).epsilon(1e-15));
        }
    }
}

TEST_CASE("resize happens at load time") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(16, 2, 1, 13, 0);
    const auto manifest_path = testsupport::write_dataset(set, dir.path);
    PreprocessConfig cfg;
    cfg.target_side = 24;
    const Dataset ds = load_examples(load_manifest(manifest_path), cfg);
    CHECK(ds.train[0].image.width == 24);
    CHECK(ds.train[0].mask.width == 24);
    // masks stay strictly binary through nearest-neighbor resizing by construction
}

TEST_CASE("mask thresholding in file form: 128 is fg, 127 is bg") {
    testsupport::TempDir dir;
    GrayImage img = GrayImage::filled(8, 8, 0.2);
    GrayImage mask = GrayImage::filled(8, 8, 0.0);
    mask.at(0, 0) = 128.0 / 255.0;
    mask.at(1, 0) = 127.0 / 255.0;
    write_file_atomic(dir.path / "images" / "a.png", encode_png_gray(img));
    write_file_atomic(dir.path / "masks" / "a.png", encode_png_gray(mask));
    write_text(dir.path / "manifest.json", R"({
      "version": "1",
      "entries": [{"id": "a", "image": "images/a.png", "mask": "masks/a.png", "split": "train"}]
    })");

    PreprocessConfig cfg;
    cfg.target_side = 8;
    const Dataset ds = load_examples(load_manifest(dir.path / "manifest.json"), cfg);
    REQUIRE(ds.train.size() == 1);
    CHECK(ds.train[0].mask.is_fg(0, 0));
    CHECK_FALSE(ds.train[0].mask.is_fg(1, 0));
}

TEST_CASE("manifest validation failures") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(8, 1, 1, 17, 0);
    testsupport::write_dataset(set, dir.path);
    const std::string image = "images/train_00.png";
    const std::string mask = "masks/train_00.png";

    SUBCASE("malformed json carries a location") {
        write_text(dir.path / "bad.json", "{\"version\": \"1\", entries: }");
        try {
            load_manifest(dir.path / "bad.json");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            // the message must point at the failure location
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }

    SUBCASE("duplicate ids are named") {
        write_text(dir.path / "dup.json",
                   R"({"version": "1", "entries": [)"
                   R"({"id": "x", "image": ")" + image + R"(", "mask": ")" + mask +
                       R"(", "split": "train"},)"
                       R"({"id": "x", "image": ")" +
                       image + R"(", "mask": ")" + mask + R"(", "split": "test"}]})");
        try {
            load_manifest(dir.path / "dup.json");
            FAIL("expected DuplicateId");
        } catch (const DuplicateId& e) {
            CHECK(std::string(e.what()).find("'x'") != std::string::npos);
        }
    }

    SUBCASE("missing files are named") {
        write_text(dir.path / "missing.json",
                   R"({"version": "1", "entries": [{"id": "x", "image": "nope.png", "mask": ")" +
                       mask + R"(", "split": "train"}]})");
        try {
            load_manifest(dir.path / "missing.json");
            FAIL("expected MissingFile");
        } catch (const MissingFile& e) {
            CHECK(std::string(e.what()).find("nope.png") != std::string::npos);
        }
    }

    SUBCASE("unknown split tag") {
        write_text(dir.path / "split.json",
                   R"({"version": "1", "entries": [{"id": "x", "image": ")" + image +
                       R"(", "mask": ")" + mask + R"(", "split": "validation"}]})");
        CHECK_THROWS_AS(load_manifest(dir.path / "split.json"), ParseError);
    }

    SUBCASE("entries must be an array") {
        write_text(dir.path / "obj.json", R"({"version": "1", "entries": {}})");
        CHECK_THROWS_AS(load_manifest(dir.path / "obj.json"), ParseError);
    }

    SUBCASE("entry fields must be strings") {
        write_text(dir.path / "types.json",
                   R"({"version": "1", "entries": [{"id": 4, "image": ")" + image +
                       R"(", "mask": ")" + mask + R"(", "split": "train"}]})");
        CHECK_THROWS_AS(load_manifest(dir.path / "types.json"), ParseError);
    }

    SUBCASE("manifest file must exist") {
        CHECK_THROWS_AS(load_manifest(dir.path / "absent.json"), MissingFile);
    }
}

TEST_CASE("decode failures name the offending entry") {
    testsupport::TempDir dir;
    write_text(dir.path / "images" / "bad.png", "not a png at all");
    write_text(dir.path / "masks" / "bad.png", "not a png either");
    write_text(dir.path / "manifest.json",
               R"({"version": "1", "entries": [{"id": "broken", "image": "images/bad.png",)"
               R"( "mask": "masks/bad.png", "split": "train"}]})");
    try {
        load_examples(load_manifest(dir.path / "manifest.json"), {});
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }
}

TEST_CASE("cache keys: shape, determinism and sensitivity") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(8, 2, 1, 19, 0);
    const auto manifest_path = testsupport::write_dataset(set, dir.path);
    const Manifest manifest = load_manifest(manifest_path);
    const PreprocessConfig cfg;

    const std::string key_f = cache_key(manifest, cfg, Metric::frobenius);
    const std::string key_s = cache_key(manifest, cfg, Metric::ssim);
    CHECK(key_f.size() == 32);
    CHECK(is_hex(key_f));
    CHECK(key_f != key_s);
    CHECK(cache_key(manifest, cfg, Metric::frobenius) == key_f);

    // preprocessing parameters are part of the key
    PreprocessConfig other = cfg;
    other.target_side = 64;
    CHECK(cache_key(manifest, other, Metric::frobenius) != key_f);

    // file content is part of the key
    auto bytes = read_file(manifest.entries[0].image_path);
    bytes.push_back(0x00);
    write_file_atomic(manifest.entries[0].image_path, bytes);
    CHECK(cache_key(manifest, cfg, Metric::frobenius) != key_f);
}

TEST_CASE("dataset digest: 16 hex chars, independent of entry order") {
    testsupport::TempDir dir;
    const auto set = testsupport::make_duplicate_set(8, 3, 2, 23, 0);
    const auto manifest_path = testsupport::write_dataset(set, dir.path);
    Manifest manifest = load_manifest(manifest_path);

    const std::string digest = dataset_digest(manifest, {});
    CHECK(digest.size() == 16);
    CHECK(is_hex(digest));

    std::reverse(manifest.entries.begin(), manifest.entries.end());
    CHECK(dataset_digest(manifest, {}) == digest);

    PreprocessConfig other;
    other.target_side = 64;
    CHECK(dataset_digest(manifest, other) != digest);
}
