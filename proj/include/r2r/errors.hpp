#pragma once

#include <stdexcept>
#include <string>

namespace r2r {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct SchemaError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// promptgen
struct InvalidCorpus : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct EmptyName : Error { using Error::Error; };

// metrics
struct TokenizerLoadError : Error { using Error::Error; };
struct EmptyOutput : Error { using Error::Error; };
struct EmptyReference : Error { using Error::Error; };

// gateway
struct TransportError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct CassetteMiss : Error { using Error::Error; };
struct NoLogprobs : Error { using Error::Error; };

// crowdvote
struct MixedUniverse : Error { using Error::Error; };

// runner
struct ConfigError : Error { using Error::Error; };
struct MissingData : Error { using Error::Error; };

}  // namespace r2r
