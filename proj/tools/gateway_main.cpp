// Single gateway binary: scenario runner, local planning and registry
// commands, a loopback frame server, and client subcommands that talk to it.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spgw/gateway/gateway.hpp"
#include "spgw/gateway/scenario.hpp"

using namespace spgw;
using namespace spgw::gw;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

Doc read_doc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot read " + path);
    Doc d = Doc::parse(in, nullptr, false);
    if (d.is_discarded()) throw Error(Errc::ConfigError, path + " is not valid JSON");
    return d;
}

std::pair<std::string, int> parse_address(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos)
        throw Error(Errc::ConfigError, "address must be host:port, got " + address);
    return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
}

bool read_exact(int fd, char* buffer, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        auto r = ::read(fd, buffer + got, n - got);
        if (r <= 0) return false;
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, const std::string& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        auto w = ::write(fd, bytes.data() + sent, bytes.size() - sent);
        if (w <= 0) return false;
        sent += static_cast<std::size_t>(w);
    }
    return true;
}

std::optional<Frame> read_frame(int fd) {
    char header[4];
    if (!read_exact(fd, header, 4)) return std::nullopt;
    std::uint32_t n = 0;
    for (char c : header) n = (n << 8) | static_cast<unsigned char>(c);
    std::string payload(n, '\0');
    if (n > 0 && !read_exact(fd, payload.data(), n)) return std::nullopt;
    std::string wire(header, 4);
    wire += payload;
    std::size_t offset = 0;
    return decode_frame(wire, offset);
}

/// Applies the optional bootstrap sections of a config document: partner
/// directory entries, named profiles and registry content.
void bootstrap_node(GatewayNode& node, const Doc& config_doc) {
    if (config_doc.contains("partners")) {
        for (const auto& p : config_doc.at("partners")) {
            PartnerEntry entry;
            entry.gateway_id = p.value("gateway-id", node.id());
            entry.card = vo::business_card_from_doc(p);
            if (p.contains("functions"))
                for (const auto& f : p.at("functions"))
                    entry.business_functions.push_back(f.get<std::string>());
            node.register_partner(entry);
        }
    }
    if (config_doc.contains("profiles"))
        for (const auto& [name, request] : config_doc.at("profiles").items())
            node.register_profile(name, validate_profile_request(request));
    if (config_doc.contains("capabilities"))
        for (const auto& c : config_doc.at("capabilities"))
            node.registry().publish_capability(capability_from_doc(c));
    if (config_doc.contains("architectures"))
        for (const auto& a : config_doc.at("architectures"))
            node.registry().publish_architecture(architecture_from_doc(a));
}

int serve(const std::string& config_path) {
    Doc config_doc = read_doc(config_path);
    auto config = config_from_doc(config_doc);
    if (config.listen_address == "sim")
        throw Error(Errc::ConfigError, "gateway run needs listen-address host:port");
    auto [host, port] = parse_address(config.listen_address);

    Network network;
    GatewayNode node(config, network);
    bootstrap_node(node, config_doc);

    int server = ::socket(AF_INET, SOCK_STREAM, 0);
    if (server < 0) throw Error(Errc::ConfigError, "socket() failed");
    int one = 1;
    ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw Error(Errc::ConfigError, "bad listen host " + host);
    if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw Error(Errc::ConfigError, "cannot bind " + config.listen_address);
    if (::listen(server, 8) != 0) throw Error(Errc::ConfigError, "listen() failed");
    std::cerr << node.id() << " listening on " << config.listen_address << "\n";

    for (;;) {
        int client = ::accept(server, nullptr, nullptr);
        if (client < 0) break;
        while (auto frame = read_frame(client)) {
            Frame reply{"reply", frame->ref_id, node.id(), 1, Doc::object()};
            try {
                node.now++;
                reply.body = node.handle_frame(*frame);
            } catch (const Error& e) {
                reply.frame_type = "error";
                reply.body = Doc{{"code", errc_name(e.code())}, {"message", e.what()}};
            } catch (const std::exception& e) {
                reply.frame_type = "error";
                reply.body = Doc{{"message", e.what()}};
            }
            if (!write_all(client, encode_frame(reply))) break;
        }
        ::close(client);
    }
    ::close(server);
    return 0;
}

/// Sends one frame to a running gateway and prints the reply body.
int call_gateway(const std::string& connect, const Frame& frame) {
    auto [host, port] = parse_address(connect);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(Errc::ConfigError, "socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw Error(Errc::ConfigError, "bad host " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw Error(Errc::ConfigError, "cannot connect to " + connect);
    }
    int rc = kExitFailure;
    if (write_all(fd, encode_frame(frame))) {
        if (auto reply = read_frame(fd)) {
            std::cout << reply->body.dump(2) << "\n";
            rc = reply->frame_type == "error" ? kExitFailure : 0;
        }
    }
    ::close(fd);
    return rc;
}

RegistryStore& journal_store(const std::string& journal, std::optional<RegistryStore>& slot) {
    slot.emplace();
    slot->attach_journal_file(journal);
    return *slot;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"secured-profile management gateway"};
    app.require_subcommand(1);

    // --- scenario -----------------------------------------------------------
    auto* scenario = app.add_subcommand("scenario", "run a built-in simulation");
    auto* music = scenario->add_subcommand("music-store", "the jazz music store federation");
    std::int64_t seed = 1;
    std::string report_path;
    music->add_option("--seed", seed, "deterministic seed");
    music->add_option("--report", report_path, "write the report to this file");

    // --- plan ---------------------------------------------------------------
    auto* plan_cmd = app.add_subcommand("plan", "plan a profile request against a registry");
    std::string request_path, snapshot_path;
    bool plan_json = false;
    plan_cmd->add_option("--request", request_path, "profile request document")->required();
    plan_cmd->add_option("--snapshot", snapshot_path, "registry journal to plan against");
    plan_cmd->add_flag("--json", plan_json, "print the raw outcome document");

    // --- registry -----------------------------------------------------------
    auto* registry_cmd = app.add_subcommand("registry", "local registry maintenance");
    auto* publish = registry_cmd->add_subcommand("publish", "publish a descriptor");
    auto* list = registry_cmd->add_subcommand("list", "list capability instances");
    std::string publish_file, list_kind, journal = "registry.jsonl";
    publish->add_option("--file", publish_file, "descriptor document")->required();
    publish->add_option("--journal", journal, "registry journal file");
    list->add_option("--kind", list_kind, "filter by VAS kind");
    list->add_option("--journal", journal, "registry journal file");

    // --- server and client commands ------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "serve the frame protocol on a loopback socket");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "gateway configuration")->required();

    std::string connect = "127.0.0.1:7700";
    auto add_connect = [&](CLI::App* cmd) {
        cmd->add_option("--connect", connect, "running gateway address");
    };

    auto* send_cmd = app.add_subcommand("send", "send a message through a profile");
    std::string send_collab, payload_path;
    std::vector<std::string> header_kvs;
    send_cmd->add_option("--collab", send_collab, "collaboration id")->required();
    send_cmd->add_option("--payload", payload_path, "payload file")->required();
    send_cmd->add_option("--header", header_kvs, "k=v message header");
    add_connect(send_cmd);

    auto* audit_cmd = app.add_subcommand("audit", "audit log access");
    auto* audit_dump = audit_cmd->add_subcommand("dump", "print audit entries");
    std::string audit_collab;
    audit_dump->add_option("--collab", audit_collab, "restrict to one collaboration");
    add_connect(audit_dump);

    auto* profile_cmd = app.add_subcommand("profile", "profile inspection");
    auto* profile_status = profile_cmd->add_subcommand("status", "show a profile's state");
    std::string status_collab;
    profile_status->add_option("--collab", status_collab, "collaboration id")->required();
    add_connect(profile_status);

    auto* vo_cmd = app.add_subcommand("vo", "virtual organisation lifecycle");
    std::string vo_name, vo_partner, vo_invitation, vo_profile, vo_change_path, vo_initiator;
    bool vo_accept = false;
    auto* vo_create = vo_cmd->add_subcommand("create", "instantiate an empty vo");
    vo_create->add_option("--name", vo_name, "vo id")->required();
    vo_create->add_option("--initiator", vo_initiator, "initiating partner")->required();
    add_connect(vo_create);
    auto* vo_attach = vo_cmd->add_subcommand("attach", "attach the process document");
    vo_attach->add_option("--vo", vo_name)->required();
    vo_attach->add_option("--process", vo_change_path, "process document file")->required();
    add_connect(vo_attach);
    auto* vo_invite = vo_cmd->add_subcommand("invite", "invite a provider");
    vo_invite->add_option("--vo", vo_name)->required();
    vo_invite->add_option("--partner", vo_partner)->required();
    add_connect(vo_invite);
    auto* vo_respond = vo_cmd->add_subcommand("respond", "answer an invitation");
    vo_respond->add_option("--invitation", vo_invitation)->required();
    vo_respond->add_flag("--accept", vo_accept);
    vo_respond->add_option("--profile", vo_profile, "accepted profile reference");
    add_connect(vo_respond);
    auto* vo_finalize = vo_cmd->add_subcommand("finalize", "finalize the federation");
    vo_finalize->add_option("--vo", vo_name)->required();
    add_connect(vo_finalize);
    auto* vo_adapt = vo_cmd->add_subcommand("adapt", "adapt an operational vo");
    vo_adapt->add_option("--vo", vo_name)->required();
    vo_adapt->add_option("--change", vo_change_path, "change document file")->required();
    vo_adapt->add_option("--initiator", vo_initiator, "change initiator")->required();
    add_connect(vo_adapt);
    auto* vo_status = vo_cmd->add_subcommand("status", "show a vo record");
    vo_status->add_option("--vo", vo_name)->required();
    add_connect(vo_status);

    CLI11_PARSE(app, argc, argv);

    try {
        if (music->parsed()) {
            auto result = run_music_store_scenario({seed, false});
            std::string text = result.report.dump(2) + "\n";
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                if (!out) throw Error(Errc::ConfigError, "cannot write " + report_path);
                out << text;
            }
            std::cout << text;
            if (!result.ok) {
                std::cerr << "scenario failed at " << result.failed_step << ": " << result.error
                          << "\n";
                return kExitFailure;
            }
            return 0;
        }
        if (plan_cmd->parsed()) {
            std::optional<RegistryStore> slot;
            RegistryStore local;
            RegistryStore& store =
                snapshot_path.empty() ? local : journal_store(snapshot_path, slot);
            auto request = validate_profile_request(read_doc(request_path));
            auto outcome = plan::plan_profile(request, store.snapshot(), store);
            auto doc = plan::plan_outcome_to_doc(outcome);
            if (plan_json) {
                std::cout << doc.dump(2) << "\n";
            } else {
                std::cout << "status: " << doc.at("status").get<std::string>() << "\n";
                if (doc.contains("ccm")) std::cout << doc.at("ccm").dump(2) << "\n";
                if (doc.contains("deviations") && !doc.at("deviations").empty())
                    std::cout << "deviations: " << doc.at("deviations").dump(2) << "\n";
                if (doc.contains("error")) std::cout << "error: " << doc.at("error").dump(2) << "\n";
            }
            return outcome.status == plan::PlanOutcome::Status::Failed ? kExitFailure : 0;
        }
        if (publish->parsed()) {
            std::optional<RegistryStore> slot;
            auto& store = journal_store(journal, slot);
            Doc d = read_doc(publish_file);
            std::string id = d.contains("instance-id")
                                 ? store.publish_capability(capability_from_doc(d))
                                 : store.publish_architecture(architecture_from_doc(d));
            std::cout << "published " << id << "\n";
            return 0;
        }
        if (list->parsed()) {
            std::optional<RegistryStore> slot;
            auto& store = journal_store(journal, slot);
            auto snapshot = store.snapshot();
            Doc out = Doc::array();
            auto kinds = list_kind.empty()
                             ? all_vas_kinds()
                             : std::vector<VasKind>{vas_kind_from_string(list_kind)};
            for (auto kind : kinds)
                for (const auto& d : find_capabilities(snapshot, kind, {}))
                    out.push_back(capability_to_doc(d));
            std::cout << out.dump(2) << "\n";
            return 0;
        }
        if (run_cmd->parsed()) return serve(config_path);

        if (send_cmd->parsed()) {
            MessageEnvelope e;
            e.collaboration_id = send_collab;
            std::ifstream in(payload_path);
            if (!in) throw Error(Errc::ConfigError, "cannot read " + payload_path);
            std::stringstream buffer;
            buffer << in.rdbuf();
            e.payload = buffer.str();
            for (const auto& kv : header_kvs) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw Error(Errc::ConfigError, "--header wants k=v, got " + kv);
                e.headers[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            return call_gateway(connect, {"message", send_collab, "cli", 1,
                                          Doc{{"envelope", envelope_to_doc(e)}}});
        }
        if (audit_dump->parsed()) {
            Doc body = Doc::object();
            if (!audit_collab.empty()) body["collaboration-id"] = audit_collab;
            return call_gateway(connect, {"audit-dump", "", "cli", 1, body});
        }
        if (profile_status->parsed())
            return call_gateway(connect, {"profile-status", status_collab, "cli", 1, Doc::object()});

        if (vo_create->parsed())
            return call_gateway(connect, {"vo-create", vo_name, "cli", 1,
                                          Doc{{"initiator", vo_initiator}}});
        if (vo_attach->parsed())
            return call_gateway(connect, {"vo-attach", vo_name, "cli", 1,
                                          Doc{{"process", read_doc(vo_change_path)}}});
        if (vo_invite->parsed())
            return call_gateway(connect,
                                {"vo-invite", vo_name, "cli", 1, Doc{{"partner", vo_partner}}});
        if (vo_respond->parsed())
            return call_gateway(connect, {"vo-respond", "", "cli", 1,
                                          Doc{{"invitation-id", vo_invitation},
                                              {"accept", vo_accept},
                                              {"profile", vo_profile}}});
        if (vo_finalize->parsed())
            return call_gateway(connect, {"vo-finalize", vo_name, "cli", 1, Doc::object()});
        if (vo_adapt->parsed())
            return call_gateway(connect, {"vo-adapt", vo_name, "cli", 1,
                                          Doc{{"initiator", vo_initiator},
                                              {"change", read_doc(vo_change_path)}}});
        if (vo_status->parsed())
            return call_gateway(connect, {"vo-status", vo_name, "cli", 1, Doc::object()});

        std::cerr << "no actionable subcommand\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == Errc::ConfigError ? kExitConfig : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitFailure;
    }
}
