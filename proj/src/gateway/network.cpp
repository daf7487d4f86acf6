#include "spgw/gateway/frame.hpp"

#include "spgw/core/error.hpp"

namespace spgw::gw {

Doc frame_to_doc(const Frame& f) {
    return Doc{{"frame-type", f.frame_type},
               {"ref-id", f.ref_id},
               {"sender", f.sender},
               {"version", f.version},
               {"body", f.body}};
}

Frame frame_from_doc(const Doc& d) {
    if (!d.is_object()) throw Error(Errc::MalformedDocument, "frame must be an object");
    Frame f;
    try {
        f.frame_type = d.at("frame-type").get<std::string>();
        f.ref_id = d.at("ref-id").get<std::string>();
        f.sender = d.at("sender").get<std::string>();
        f.version = d.at("version").get<int>();
        f.body = d.at("body");
    } catch (const Doc::exception& e) {
        throw Error(Errc::MalformedDocument, e.what());
    }
    if (f.frame_type.empty()) throw Error(Errc::MalformedDocument, "empty frame-type");
    return f;
}

std::string encode_frame(const Frame& f) {
    std::string payload = frame_to_doc(f).dump();
    std::string out;
    out.reserve(payload.size() + 4);
    auto n = static_cast<std::uint32_t>(payload.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out += payload;
    return out;
}

Frame decode_frame(const std::string& bytes, std::size_t& offset) {
    if (offset + 4 > bytes.size()) throw Error(Errc::MalformedDocument, "truncated length prefix");
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i)
        n = (n << 8) | static_cast<unsigned char>(bytes[offset + i]);
    offset += 4;
    if (offset + n > bytes.size()) throw Error(Errc::MalformedDocument, "truncated frame body");
    Doc d = Doc::parse(bytes.substr(offset, n), nullptr, false);
    if (d.is_discarded()) throw Error(Errc::MalformedDocument, "frame body is not valid JSON");
    offset += n;
    return frame_from_doc(d);
}

// ---------------------------------------------------------------------------

void Network::register_gateway(const std::string& gateway_id, Handler handler) {
    handlers_[gateway_id] = std::move(handler);
}

bool Network::known(const std::string& gateway_id) const {
    return handlers_.count(gateway_id) > 0;
}

Doc Network::route(const std::string& from, const std::string& to, const Frame& frame) {
    if (!known(from)) throw Error(Errc::UnknownGateway, from);
    auto it = handlers_.find(to);
    if (it == handlers_.end()) throw Error(Errc::UnknownGateway, to);

    auto drop = drops_.find({from, to});
    if (drop != drops_.end() && drop->second != 0) {
        if (drop->second > 0) drop->second--;
        throw Error(Errc::Dropped, from + " -> " + to + ": " + frame.frame_type);
    }

    // round-trip through the wire format on every hop
    std::string wire = encode_frame(frame);
    std::size_t offset = 0;
    Frame decoded = decode_frame(wire, offset);
    delivered_++;
    return it->second(decoded);
}

void Network::inject_drop(const std::string& from, const std::string& to, int count) {
    drops_[{from, to}] = count;
}

}  // namespace spgw::gw
