#pragma once

// Core pipeline, network-free. Include sumrank/transports_http.hpp for the
// live HTTP transport and remote embeddings (needs OpenSSL), and
// sumrank/cli.hpp for the command line front end.

#include "sumrank/chat.hpp"
#include "sumrank/config.hpp"
#include "sumrank/corpus.hpp"
#include "sumrank/embedding.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/eval.hpp"
#include "sumrank/generate.hpp"
#include "sumrank/io.hpp"
#include "sumrank/ranker.hpp"
#include "sumrank/retrieval.hpp"
#include "sumrank/rouge.hpp"
