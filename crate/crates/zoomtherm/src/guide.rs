//! Book chapters as doc-tested modules (placeholder until the guide lands).
