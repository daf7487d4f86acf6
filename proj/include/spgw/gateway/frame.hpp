#pragma once

#include <functional>
#include <map>
#include <string>

#include "spgw/core/model.hpp"

namespace spgw::gw {

/// One protocol message between gateways. On the wire a frame is a 4-byte
/// big-endian length prefix followed by that many bytes of UTF-8 JSON.
struct Frame {
    std::string frame_type;
    std::string ref_id;  // session or vo id the frame belongs to
    std::string sender;  // gateway id
    int version = 1;
    Doc body = Doc::object();

    bool operator==(const Frame&) const = default;
};

Doc frame_to_doc(const Frame& f);
Frame frame_from_doc(const Doc& d);  // throws MalformedDocument

std::string encode_frame(const Frame& f);
/// Decodes one frame starting at offset; advances offset past it. Throws
/// MalformedDocument on truncated or invalid input.
Frame decode_frame(const std::string& bytes, std::size_t& offset);

// ---------------------------------------------------------------------------

/// In-process link layer: synchronous delivery in send order gives exact
/// per-(sender, receiver) FIFO. Every routed frame passes through the wire
/// encoding so the codec is exercised on each hop.
class Network {
public:
    using Handler = std::function<Doc(const Frame&)>;

    void register_gateway(const std::string& gateway_id, Handler handler);
    bool known(const std::string& gateway_id) const;

    /// Delivers the frame and returns the receiver's reply body.
    /// Throws UnknownGateway or, under fault injection, Dropped.
    Doc route(const std::string& from, const std::string& to, const Frame& frame);

    /// Drops the next `count` frames on the (from, to) link; -1 drops all.
    void inject_drop(const std::string& from, const std::string& to, int count);

    std::int64_t delivered_count() const { return delivered_; }

private:
    std::map<std::string, Handler> handlers_;
    std::map<std::pair<std::string, std::string>, int> drops_;
    std::int64_t delivered_ = 0;
};

}  // namespace spgw::gw
