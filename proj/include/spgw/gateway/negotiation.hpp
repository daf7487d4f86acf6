#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spgw/core/model.hpp"

namespace spgw::gw {

/// A party's position in a negotiation: who they are and the constraint
/// envelope they currently stand behind. The requester's envelope states
/// requirements; the owner's states what its capabilities can guarantee.
struct NegotiationParty {
    std::string gateway_id;
    ProfileRequest envelope;
};

struct NegotiationSession {
    enum class Status { Negotiating, Agreed, Rejected };

    std::string session_id;
    NegotiationParty requester;
    NegotiationParty owner;
    int round = 0;
    int max_rounds = 4;
    std::vector<std::pair<std::string, ProfileRequest>> transcript;  // (gateway-id, offer)
    Status status = Status::Negotiating;
    ProfileRequest agreed;      // valid when Agreed; appended to the transcript
    std::string reject_reason;  // valid when Rejected
    std::string expected_sender;
};

NegotiationSession open_negotiation(std::string session_id, NegotiationParty requester,
                                    NegotiationParty owner, int max_rounds = 4);

/// Processes one offer. The receiver checks it against their own envelope:
/// compatible on every shared kind means Agreed with the intersection offer;
/// otherwise the receiver concedes their last-declared incompatible
/// constraint (unless Locked) and it becomes their turn to counter-offer.
/// At max-rounds without agreement the session is Rejected(no-convergence).
/// Throws SessionClosed after Agreed/Rejected, ProtocolViolation when the
/// sender is out of turn.
void negotiate(NegotiationSession& session, const std::string& sender_id,
               const ProfileRequest& offer);

/// Drives the session to completion: each party in turn offers its current
/// envelope until Agreed or Rejected.
NegotiationSession run_negotiation(std::string session_id, NegotiationParty requester,
                                   NegotiationParty owner, int max_rounds = 4);

/// True iff for every kind both the offer and the envelope mention, the
/// offer's constraints satisfy the envelope's.
bool offer_satisfies(const ProfileRequest& offer, const ProfileRequest& envelope);

Doc negotiation_to_doc(const NegotiationSession& s);

}  // namespace spgw::gw
