//! Optimal matching against brute force and Dijkstra against BFS.

mod common;

use common::suites;

#[test]
fn matching_equals_brute_force() {
    suites::matching_vs_brute_force(100);
}

#[test]
fn dijkstra_equals_bfs_on_the_lattice() {
    suites::dijkstra_vs_bfs(1000);
}
