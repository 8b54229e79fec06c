#pragma once

#include "r2r/corpus.hpp"
#include "r2r/crowdvote.hpp"
#include "r2r/errors.hpp"
#include "r2r/gateway.hpp"
#include "r2r/metrics.hpp"
#include "r2r/promptgen.hpp"
#include "r2r/report.hpp"
#include "r2r/runner.hpp"
#include "r2r/scripted_client.hpp"
#include "r2r/text.hpp"
#include "r2r/tokenizer.hpp"
#include "r2r/util.hpp"
