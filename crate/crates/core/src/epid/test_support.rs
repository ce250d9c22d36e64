use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{join_member, setup_group, GroupIssuingPrivateKey, GroupPublicKey, UserMemberPrivateKey};
use crate::group_math::ParameterProfile;

pub const ISSUER_BASENAME: &[u8] = b"idp-issuer.com/test-group";

/// One desk-profile group shared by every unit test.
pub fn desk_group() -> &'static (GroupPublicKey, GroupIssuingPrivateKey) {
    static GROUP: OnceLock<(GroupPublicKey, GroupIssuingPrivateKey)> = OnceLock::new();
    GROUP.get_or_init(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
        setup_group(&ParameterProfile::desk(), &mut rng).unwrap()
    })
}

/// Member key number `id` of the shared group, joined once and cached.
pub fn member(id: u64) -> UserMemberPrivateKey {
    static MEMBERS: OnceLock<Mutex<BTreeMap<u64, UserMemberPrivateKey>>> = OnceLock::new();
    let cache = MEMBERS.get_or_init(Default::default);
    if let Some(k) = cache.lock().unwrap().get(&id) {
        return k.clone();
    }
    let (gpk, gipk) = desk_group();
    let mut rng = ChaCha20Rng::seed_from_u64(1000 + id);
    let key = join_member(gpk, gipk, ISSUER_BASENAME, &mut rng).unwrap();
    cache.lock().unwrap().insert(id, key.clone());
    key
}
