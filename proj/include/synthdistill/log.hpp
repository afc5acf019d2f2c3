// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SYNTHDISTILL_LOG_HPP_
#define SYNTHDISTILL_LOG_HPP_

#include <functional>
#include <string>

namespace synthdistill {

using WarningHandler = std::function<void(const std::string&)>;

// Installs a process-wide warning sink and returns the previous one.
// The default writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void log_warning(const std::string& message);

}  // namespace synthdistill

#endif  // SYNTHDISTILL_LOG_HPP_
