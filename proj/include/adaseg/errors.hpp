#pragma once

#include <stdexcept>
#include <string>

namespace adaseg
{
	// Reading or writing a file failed, or its contents could not be decoded.
	struct IoError : std::runtime_error
	{
		using std::runtime_error::runtime_error;
	};

	// A configuration value or an argument violates a precondition.
	struct ConfigError : std::invalid_argument
	{
		using std::invalid_argument::invalid_argument;
	};

	// An operation was requested in a state that does not permit it
	// (unknown region, empty history, diverged channel partitions, ...).
	struct StateError : std::logic_error
	{
		using std::logic_error::logic_error;
	};
}
