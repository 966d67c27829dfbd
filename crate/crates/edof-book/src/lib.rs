//! Placeholder until chapters land.
