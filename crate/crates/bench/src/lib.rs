//! Placeholder lib so the bench target has a package root.
