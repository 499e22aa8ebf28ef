//! Published reference values for 48 real-world graphs.

/// (graph, nodes, k at δ = 0.3)
pub const GRAPH_SIZES: &[(&str, u64, usize)] = &[
    ("Russia", 97_134, 39),
    ("L.A.", 603_834, 45),
    ("London", 1_690_053, 48),
    ("Epinions (1)", 75_879, 38),
    ("Slashdot (08/11/06)", 77_360, 38),
    ("Twitter", 81_306, 38),
    ("Slashdot (09/02/16)", 81_867, 38),
    ("Slashdot (09/02/21)", 82_140, 38),
    ("Slashdot (09/02/22)", 82_168, 38),
    ("GPlus", 107_614, 39),
    ("Epinions (2)", 131_828, 40),
    ("Youtube", 1_134_890, 47),
    ("Pokec", 1_632_803, 48),
    ("Flickr", 1_715_255, 48),
    ("Livejournal", 5_204_176, 52),
    ("Patents", 23_133, 34),
    ("ArXiv (Theo. Cit.)", 27_770, 34),
    ("ArXiv (Phy. Cit.)", 34_546, 35),
    ("ArXiv (Phy.)", 12_008, 32),
    ("ArXiv (Astro)", 18_772, 33),
    ("DBLP", 317_080, 43),
    ("ArXiv (Condense)", 3_774_768, 51),
    ("Email (Enron)", 36_692, 35),
    ("Email (Europe)", 265_214, 42),
    ("Wiki", 2_394_385, 49),
    ("Stanford", 281_903, 42),
    ("NotreDame", 325_729, 43),
    ("BerkStan", 685_230, 45),
    ("Google", 875_713, 46),
    ("Brightkite", 58_228, 37),
    ("Gowalla", 196_591, 41),
    ("Oregon (1)", 11_174, 31),
    ("Oregon (2)", 11_461, 32),
    ("CAIDA", 26_475, 34),
    ("Skitter", 1_696_415, 48),
    ("Gnutella (02/08/04)", 10_876, 31),
    ("Gnutella (02/08/25)", 22_687, 34),
    ("Gnutella (02/08/24)", 26_518, 34),
    ("Gnutella (02/08/30)", 36_682, 35),
    ("Gnutella (02/08/31)", 62_586, 37),
    ("Amazon (03/03/02)", 262_111, 42),
    ("Amazon (2012)", 334_863, 43),
    ("Amazon (03/03/12)", 400_727, 43),
    ("Amazon (03/06/01)", 403_394, 43),
    ("Amazon (03/05/05)", 410_236, 43),
    ("Pennsylvania", 1_088_092, 47),
    ("Texas", 1_379_917, 47),
    ("California", 1_965_206, 49),
];

/// (graph, largest mismatch budget keeping uniqueness ≥ 0.99999)
pub const MAX_MISMATCH: &[(&str, i64)] = &[
    ("Oregon (1)", 0),
    ("Oregon (2)", 1),
    ("CAIDA", 1),
    ("Email (Enron)", 1),
    ("ArXiv (Theo. Cit.)", 1),
    ("ArXiv (Phy. Cit.)", 1),
    ("ArXiv (Phy.)", 1),
    ("ArXiv (Astro)", 1),
    ("Patents", 2),
    ("Slashdot (08/11/06)", 3),
    ("Twitter", 3),
    ("Slashdot (09/02/16)", 3),
    ("Slashdot (09/02/21)", 3),
    ("Slashdot (09/02/22)", 3),
    ("Brightkite", 3),
    ("Russia", 4),
    ("Epinions (1)", 4),
    ("GPlus", 4),
    ("Epinions (2)", 5),
    ("Stanford", 5),
    ("Email (Europe)", 5),
    ("Gowalla", 5),
    ("BerkStan", 6),
    ("DBLP", 7),
    ("NotreDame", 7),
    ("L.A.", 8),
    ("London", 8),
    ("Flickr", 8),
    ("Wiki", 8),
    ("Google", 8),
    ("Skitter", 8),
    ("Youtube", 9),
    ("Pokec", 9),
    ("ArXiv (Condense)", 11),
    ("Livejournal", 12),
];

pub fn nodes_of(name: &str) -> u64 {
    GRAPH_SIZES
        .iter()
        .find(|r| r.0 == name)
        .unwrap_or_else(|| panic!("unknown graph {name}"))
        .1
}
