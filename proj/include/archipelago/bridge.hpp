#pragma once

#include <string>
#include <vector>

#include "archipelago/blackbox.hpp"

namespace archipelago {

enum class BridgeMode { vector, mask };

struct BridgeOptions {
  std::vector<std::string> command;  // argv, executed directly
  BridgeMode mode = BridgeMode::vector;
  double timeout_seconds = 30.0;
  int batch_size = 256;
};

class BridgeError : public Error {
 public:
  enum class Kind {
    spawn,      // process could not be started
    handshake,  // greeting failed or declared dimensions mismatch
    protocol,   // malformed or out-of-order traffic after the handshake
    timeout,    // no reply within the deadline
    closed,     // peer went away mid-conversation
  };

  BridgeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Spawns the command and speaks line-delimited JSON over its stdin/stdout:
//
//   -> {"type":"hello","p":<int>,"mode":"vector"|"mask"}
//   <- {"type":"ready","p":<int>}
//   -> {"type":"eval","id":<int>,"inputs":[[<float>...],...]}
//   <- {"type":"result","id":<int>,"outputs":[<float>...]}
//   <- {"type":"error","id":<int>,"message":<string>}
//
// One request is in flight at a time and ids increase strictly. In vector
// mode inputs are realized vectors; in mask mode they are 0/1 arrays and the
// host process owns the mapping into its native input encoding. The returned
// BlackBox serializes wire access internally.
BlackBox bridge_open(const BridgeOptions& options, const PerturbationSpace& space);

// Convenience: run a command line through /bin/sh -c.
std::vector<std::string> shell_command(const std::string& command_line);

}  // namespace archipelago
