#include <chrono>
#include <cmath>
#include <string>

#include <httplib.h>

#include "promptseg/backend.hpp"
#include "promptseg/errors.hpp"

namespace promptseg {

namespace {

std::string transport_error_name(httplib::Error e) {
    return httplib::to_string(e);
}

} // namespace

SoftMask remote_segment(const PromptCanvas& canvas, const BackendSpec& spec) {
    if (spec.kind != BackendKind::remote) {
        throw std::invalid_argument("remote_segment: backend spec is not remote");
    }
    if (spec.endpoint.empty()) {
        throw std::invalid_argument("remote_segment: endpoint missing");
    }

    httplib::Client client(spec.endpoint);
    const auto timeout =
        std::chrono::milliseconds(static_cast<long long>(std::llround(spec.timeout_secs * 1000.0)));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const std::vector<std::uint8_t> png = encode_png(canvas.image);
    httplib::MultipartFormDataItems items = {
        {"canvas", std::string(png.begin(), png.end()), "canvas.png", "image/png"},
        {"k", std::to_string(canvas.k), "", ""},
        {"layout", canvas.layout_version, "", ""},
    };

    httplib::Result res = client.Post("/segment", items);
    if (!res) {
        const httplib::Error err = res.error();
        switch (err) {
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Read:
            case httplib::Error::Write:
                throw TimeoutError("remote_segment: request exceeded " +
                                   std::to_string(spec.timeout_secs) + "s (" +
                                   transport_error_name(err) + ")");
            default:
                throw ConnectError("remote_segment: cannot reach " + spec.endpoint + " (" +
                                   transport_error_name(err) + ")");
        }
    }
    if (res->status != 200) {
        throw ServerError("remote_segment: server returned " + std::to_string(res->status) + ": " +
                          res->body);
    }

    DecodeInfo info;
    RasterImage img;
    try {
        const auto* data = reinterpret_cast<const std::uint8_t*>(res->body.data());
        img = decode_image(std::span<const std::uint8_t>(data, res->body.size()), info);
    } catch (const Error& e) {
        throw ProtocolError(std::string("remote_segment: response is not a decodable image: ") + e.what());
    }
    if (info.container != "png" || info.source_channels != 1 || info.bit_depth != 8) {
        throw ProtocolError("remote_segment: response must be an 8-bit grayscale PNG (got " +
                            info.container + ", " + std::to_string(info.source_channels) +
                            " channels, " + std::to_string(info.bit_depth) + "-bit)");
    }
    if (img.width != canvas.panel_side || img.height != canvas.panel_side) {
        throw ProtocolError("remote_segment: mask is " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", expected " +
                            std::to_string(canvas.panel_side) + "x" +
                            std::to_string(canvas.panel_side));
    }

    SoftMask out;
    out.width = img.width;
    out.height = img.height;
    out.values.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = img.pixels[i * 3]; // gray: all channels equal after expansion
    }
    return out;
}

} // namespace promptseg
